#include "mixnet/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mixnet/parallel.hpp"
#include "mixnet/rng.hpp"

namespace mixnet {

namespace {

constexpr double kLogFloor = -700.0;

int find_variable(const std::vector<std::string>& variables, const std::string& name) {
    const auto it = std::find(variables.begin(), variables.end(), name);
    if (it == variables.end()) {
        throw std::invalid_argument("structure: unknown variable '" + name + "'");
    }
    return static_cast<int>(it - variables.begin());
}

bool mixtures_equal(const GaussianMixture& a, const GaussianMixture& b) {
    if (a.variables() != b.variables() || a.component_count() != b.component_count()) return false;
    for (std::size_t k = 0; k < a.component_count(); ++k) {
        const auto& ca = a.components()[k];
        const auto& cb = b.components()[k];
        if (ca.weight != cb.weight || ca.mean != cb.mean || ca.covariance != cb.covariance) {
            return false;
        }
    }
    return true;
}

bool tables_equal(const MixtureTable& a, const MixtureTable& b) {
    if (a.discrete_variables() != b.discrete_variables() || a.arities() != b.arities() ||
        a.continuous_variables() != b.continuous_variables() || a.cell_count() != b.cell_count()) {
        return false;
    }
    for (std::size_t cell = 0; cell < a.cell_count(); ++cell) {
        if (a.prob(cell) != b.prob(cell)) return false;
        if (!mixtures_equal(a.mixture(cell), b.mixture(cell))) return false;
    }
    return true;
}

}  // namespace

std::vector<std::size_t> MixNetStructure::topological_order() const {
    const std::size_t n = variables.size();
    std::vector<std::vector<std::size_t>> children(n);
    std::vector<std::size_t> in_degree(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& p : parents[i]) {
            children[find_variable(variables, p)].push_back(i);
            ++in_degree[i];
        }
    }
    // Lowest ready index first, so the order is unique and reproducible.
    std::vector<std::size_t> order;
    order.reserve(n);
    std::vector<bool> placed(n, false);
    for (std::size_t step = 0; step < n; ++step) {
        std::size_t pick = n;
        for (std::size_t i = 0; i < n; ++i) {
            if (!placed[i] && in_degree[i] == 0) {
                pick = i;
                break;
            }
        }
        if (pick == n) throw std::invalid_argument("structure: parent relation has a cycle");
        placed[pick] = true;
        order.push_back(pick);
        for (const std::size_t c : children[pick]) --in_degree[c];
    }
    return order;
}

void MixNetStructure::validate(const Schema& schema) const {
    if (variables.size() != schema.size() || parents.size() != variables.size()) {
        throw std::invalid_argument("structure: variable list does not match schema");
    }
    for (std::size_t i = 0; i < variables.size(); ++i) {
        if (variables[i] != schema.columns[i].name) {
            throw std::invalid_argument("structure: variable order does not match schema");
        }
        for (const auto& p : parents[i]) {
            if (p == variables[i]) {
                throw std::invalid_argument("structure: variable cannot parent itself");
            }
            find_variable(variables, p);
        }
        for (std::size_t a = 0; a < parents[i].size(); ++a) {
            for (std::size_t b = a + 1; b < parents[i].size(); ++b) {
                if (parents[i][a] == parents[i][b]) {
                    throw std::invalid_argument("structure: duplicate parent");
                }
            }
        }
    }
    topological_order();
}

std::size_t MixNetStructure::arc_count() const {
    std::size_t total = 0;
    for (const auto& p : parents) total += p.size();
    return total;
}

MixNet::MixNet(Schema schema, MixNetStructure structure, std::vector<MixNetNode> nodes)
    : schema_(std::move(schema)), structure_(std::move(structure)), nodes_(std::move(nodes)) {
    structure_.validate(schema_);
    if (nodes_.size() != structure_.variables.size()) {
        throw std::invalid_argument("mixnet: node count does not match structure");
    }
    columns_.resize(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const auto& node = nodes_[i];
        const auto bind = [&](const std::vector<std::string>& names, std::vector<int>& cols) {
            for (const auto& name : names) cols.push_back(schema_.index_of(name));
        };
        bind(node.joint.discrete_variables(), columns_[i].joint_q);
        bind(node.joint.continuous_variables(), columns_[i].joint_c);
        bind(node.parent_marginal.discrete_variables(), columns_[i].marginal_q);
        bind(node.parent_marginal.continuous_variables(), columns_[i].marginal_c);

        if (!tables_equal(node.parent_marginal, marginalize_out(node.joint, structure_.variables[i]))) {
            throw std::invalid_argument(
                "mixnet: parent marginal is not the marginalized joint table");
        }
    }
}

double MixNet::table_term(const MixtureTable& table, const std::vector<int>& q_cols,
                          const std::vector<int>& c_cols, std::span<const double> row) const {
    std::vector<int> q(q_cols.size());
    for (std::size_t i = 0; i < q_cols.size(); ++i) q[i] = static_cast<int>(row[q_cols[i]]);
    Eigen::VectorXd c(static_cast<Eigen::Index>(c_cols.size()));
    for (std::size_t i = 0; i < c_cols.size(); ++i) c(static_cast<Eigen::Index>(i)) = row[c_cols[i]];
    const double term = table.log_density(q, c);
    if (term < kLogFloor) {
        clamp_events_->fetch_add(1);
        return kLogFloor;
    }
    return term;
}

double MixNet::node_log_density(std::size_t node, std::span<const double> row) const {
    const auto& cols = columns_[node];
    return table_term(nodes_[node].joint, cols.joint_q, cols.joint_c, row) -
           table_term(nodes_[node].parent_marginal, cols.marginal_q, cols.marginal_c, row);
}

double MixNet::row_log_density(std::span<const double> row) const {
    if (row.size() != schema_.size()) throw std::invalid_argument("mixnet: row width mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) total += node_log_density(i, row);
    return total;
}

std::int64_t node_param_count(const MixtureTable& joint) { return param_count(joint); }

MixNet fit_parameters(const MixNetStructure& structure, const Dataset& data,
                      const TableConfig& config) {
    structure.validate(data.schema());
    const std::size_t n = structure.variables.size();
    std::vector<MixNetNode> nodes(n);
    parallel_for(n, [&](std::size_t i) {
        std::vector<std::string> members{structure.variables[i]};
        members.insert(members.end(), structure.parents[i].begin(), structure.parents[i].end());
        std::vector<std::string> q, c;
        for (const auto& name : members) {
            if (data.schema().is_discrete(data.schema().index_of(name))) {
                q.push_back(name);
            } else {
                c.push_back(name);
            }
        }
        nodes[i].joint = fit_table(data, q, c, config);
        nodes[i].parent_marginal = marginalize_out(nodes[i].joint, structure.variables[i]);
    });
    return MixNet(data.schema(), structure, std::move(nodes));
}

double log_likelihood(const MixNet& net, const Dataset& data) {
    if (!(data.schema() == net.schema())) throw std::invalid_argument("mixnet: schema mismatch");
    std::vector<double> per_row(data.rows());
    parallel_for(data.rows(), [&](std::size_t r) { per_row[r] = net.row_log_density(data.row(r)); });
    double total = 0.0;
    for (const double v : per_row) total += v;
    return total;
}

double network_bic(const MixNet& net, const Dataset& data) {
    if (data.rows() == 0) throw std::invalid_argument("network_bic: empty data");
    std::int64_t params = 0;
    for (const auto& node : net.nodes()) params += node_param_count(node.joint);
    return log_likelihood(net, data) -
           0.5 * std::log(static_cast<double>(data.rows())) * static_cast<double>(params);
}

Dataset sample_network(const MixNet& net, std::size_t n, std::uint64_t seed) {
    const Schema& schema = net.schema();
    const std::size_t width = schema.size();
    const std::vector<std::size_t> order = net.structure().topological_order();
    std::vector<double> cells(n * width, 0.0);

    parallel_for(n, [&](std::size_t r) {
        const std::uint64_t row_seed = mix_seed(seed, r);
        double* row = cells.data() + r * width;
        for (const std::size_t i : order) {
            const auto& joint = net.nodes()[i].joint;
            const std::string& name = net.structure().variables[i];
            const int col = schema.index_of(name);
            const std::uint64_t draw_seed = mix_seed(row_seed, static_cast<std::uint64_t>(i));

            if (schema.is_discrete(col)) {
                const int arity = schema.arity(col);
                const auto& q_vars = joint.discrete_variables();
                std::vector<int> q(q_vars.size());
                std::size_t own_slot = 0;
                for (std::size_t s = 0; s < q_vars.size(); ++s) {
                    if (q_vars[s] == name) {
                        own_slot = s;
                    } else {
                        q[s] = static_cast<int>(row[schema.index_of(q_vars[s])]);
                    }
                }
                const auto& c_vars = joint.continuous_variables();
                Eigen::VectorXd c(static_cast<Eigen::Index>(c_vars.size()));
                for (std::size_t s = 0; s < c_vars.size(); ++s) {
                    c(static_cast<Eigen::Index>(s)) = row[schema.index_of(c_vars[s])];
                }
                std::vector<double> log_terms(arity);
                for (int v = 0; v < arity; ++v) {
                    q[own_slot] = v;
                    log_terms[v] = joint.log_density(q, c);
                }
                const double hi = *std::max_element(log_terms.begin(), log_terms.end());
                if (!std::isfinite(hi)) {
                    throw std::runtime_error("conditioning on impossible evidence");
                }
                std::vector<double> weights(arity);
                for (int v = 0; v < arity; ++v) weights[v] = std::exp(log_terms[v] - hi);
                Rng rng(draw_seed);
                row[col] = static_cast<double>(rng.pick(weights));
            } else {
                const auto& q_vars = joint.discrete_variables();
                std::vector<int> q(q_vars.size());
                for (std::size_t s = 0; s < q_vars.size(); ++s) {
                    q[s] = static_cast<int>(row[schema.index_of(q_vars[s])]);
                }
                const std::size_t cell = joint.cell_index(q);
                std::vector<std::pair<std::string, double>> observed;
                for (const auto& parent : joint.continuous_variables()) {
                    if (parent != name) {
                        observed.emplace_back(parent, row[schema.index_of(parent)]);
                    }
                }
                const GaussianMixture conditioned = joint.mixture(cell).condition(observed);
                row[col] = conditioned.sample(1, draw_seed)(0, 0);
            }
        }
    });
    return Dataset(schema, std::move(cells));
}

double anomaly_score(const MixNet& net, std::span<const double> row) {
    return -net.row_log_density(row);
}

}  // namespace mixnet
