#include "mixnet/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mixnet/parallel.hpp"

namespace mixnet {

namespace {

constexpr double kLogFloor = -700.0;

SearchConfig baseline_budget(SearchConfig config) {
    config.table.em.restarts *= 2;
    return config;
}

MixNetStructure empty_structure(const Schema& schema) {
    MixNetStructure s;
    for (const auto& col : schema.columns) s.variables.push_back(col.name);
    s.parents.resize(s.variables.size());
    s.maxpars = 0;
    return s;
}

// Bucket edges for density translation: midpoints between each cut and the
// next higher distinct training value, padded with the unit interval ends.
std::vector<double> density_edges(const Dataset& data, int col,
                                  const std::vector<double>& cuts) {
    std::vector<double> values(data.rows());
    for (std::size_t r = 0; r < data.rows(); ++r) values[r] = data.at(r, col);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    if (values.front() < 0.0 || values.back() > 1.0) {
        throw std::invalid_argument("pseudo-discrete: data must be scaled to [0, 1]");
    }

    std::vector<double> edges{0.0};
    for (const double cut : cuts) {
        const auto next = std::upper_bound(values.begin(), values.end(), cut);
        // A cut is always below the column max, so a higher value exists.
        edges.push_back(0.5 * (cut + *next));
    }
    edges.push_back(1.0);
    return edges;
}

struct PdFit {
    std::vector<double> cpt;
    double node_bic = 0.0;
};

struct PdFitter {
    const Dataset& ddata;              // bucketized training data
    const Schema& raw_schema;          // original kinds
    const std::vector<int>& own_arity;  // real bucket/value counts
    const std::vector<std::vector<double>>& edges;  // density edges per column
    double pseudocount;

    PdFit operator()(int child, const std::vector<int>& parent_ids) const {
        const int arity = own_arity[child];
        std::size_t parent_cells = 1;
        for (const int p : parent_ids) parent_cells *= static_cast<std::size_t>(own_arity[p]);

        std::vector<double> counts(parent_cells * static_cast<std::size_t>(arity), 0.0);
        std::vector<std::size_t> row_cell(ddata.rows());
        for (std::size_t r = 0; r < ddata.rows(); ++r) {
            std::size_t cell = 0;
            for (const int p : parent_ids) {
                cell = cell * static_cast<std::size_t>(own_arity[p]) +
                       static_cast<std::size_t>(ddata.at(r, p));
            }
            row_cell[r] = cell;
            counts[cell * arity + static_cast<std::size_t>(ddata.at(r, child))] += 1.0;
        }

        PdFit fit;
        fit.cpt.resize(counts.size());
        for (std::size_t cell = 0; cell < parent_cells; ++cell) {
            double total = 0.0;
            for (int v = 0; v < arity; ++v) total += counts[cell * arity + v];
            const double denom = total + pseudocount * arity;
            for (int v = 0; v < arity; ++v) {
                fit.cpt[cell * arity + v] =
                    denom > 0 ? (counts[cell * arity + v] + pseudocount) / denom : 1.0 / arity;
            }
        }

        const bool continuous = !raw_schema.is_discrete(child);
        double ll = 0.0;
        for (std::size_t r = 0; r < ddata.rows(); ++r) {
            const int v = static_cast<int>(ddata.at(r, child));
            double term = std::log(fit.cpt[row_cell[r] * arity + v]);
            if (continuous) term -= std::log(edges[child][v + 1] - edges[child][v]);
            ll += std::max(term, kLogFloor);
        }
        const auto params =
            static_cast<double>(parent_cells) * static_cast<double>(arity - 1);
        fit.node_bic = ll - 0.5 * std::log(static_cast<double>(ddata.rows())) * params;
        return fit;
    }
};

std::size_t pd_parent_cell(const PseudoDiscreteNet& net, std::size_t node,
                           std::span<const double> row) {
    const Schema& schema = net.schema;
    std::size_t cell = 0;
    const auto& parents = net.structure.parents[node];
    for (std::size_t s = 0; s < parents.size(); ++s) {
        const int col = schema.index_of(parents[s]);
        const int value = schema.is_discrete(col) ? static_cast<int>(row[col])
                                                  : net.density_bucket(col, row[col]);
        cell = cell * static_cast<std::size_t>(net.nodes[node].parent_arities[s]) +
               static_cast<std::size_t>(value);
    }
    return cell;
}

}  // namespace

int PseudoDiscreteNet::density_bucket(int col, double x) const {
    if (x < 0.0 || x > 1.0) {
        throw std::invalid_argument("pseudo-discrete: value outside [0, 1]");
    }
    const auto& e = boundaries[col];
    // Count interior edges <= x; x = 1 lands in the top bucket.
    const auto first = e.begin() + 1;
    const auto last = e.end() - 1;
    return static_cast<int>(std::upper_bound(first, last, x) - first);
}

double PseudoDiscreteNet::bucket_width(int col, int bucket) const {
    const auto& e = boundaries[col];
    return e[bucket + 1] - e[bucket];
}

MixNet fit_independent(const Dataset& data, const SearchConfig& config) {
    const SearchConfig cfg = baseline_budget(config);
    return fit_parameters(empty_structure(data.schema()), data, cfg.table);
}

MixNet fit_tree(const Dataset& data, const SearchConfig& config) {
    SearchConfig cfg = baseline_budget(config);
    cfg.maxpars = 1;
    if (data.schema().size() < 2) return fit_parameters(empty_structure(data.schema()), data, cfg.table);
    const ImportanceMatrix imp = importance_matrix(data, cfg);
    return greedy_search(data, imp, cfg);
}

MixNet fit_single_gaussian_net(const Dataset& data, const SearchConfig& config) {
    SearchConfig cfg = baseline_budget(config);
    cfg.table.em.component_grid = {1};
    cfg.maxpars = static_cast<int>(data.schema().size()) - 1;
    cfg.k = std::max(1, cfg.maxpars);
    cfg.discretize_importance = false;
    if (data.schema().size() < 2) return fit_parameters(empty_structure(data.schema()), data, cfg.table);
    const ImportanceMatrix imp = importance_matrix(data, cfg);
    return greedy_search(data, imp, cfg);
}

PseudoDiscreteNet fit_pseudo_discrete(const Dataset& data, const std::vector<int>& f_grid,
                                      const SearchConfig& config) {
    if (f_grid.empty()) throw std::invalid_argument("fit_pseudo_discrete: empty F grid");
    const SearchConfig base = baseline_budget(config);
    const Schema& schema = data.schema();
    const std::size_t n = schema.size();

    std::vector<int> grid = f_grid;
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    PseudoDiscreteNet best;
    double best_bic = -std::numeric_limits<double>::infinity();
    for (const int f : grid) {
        auto [map, ddata] = discretize_equal_frequency(data, f);

        std::vector<int> own_arity(n);
        std::vector<std::vector<double>> edges(n);
        for (std::size_t c = 0; c < n; ++c) {
            if (schema.is_discrete(static_cast<int>(c))) {
                own_arity[c] = schema.arity(static_cast<int>(c));
            } else {
                own_arity[c] = map.bucket_count(static_cast<int>(c));
                edges[c] = density_edges(data, static_cast<int>(c), map.cuts[c]);
            }
        }

        SearchConfig cfg = base;
        cfg.discretize_importance = false;  // already bucketized
        ImportanceMatrix imp;
        if (n >= 2) {
            imp = importance_matrix(ddata, cfg);
        } else {
            imp.variables.push_back(schema.columns[0].name);
            imp.values = Eigen::MatrixXd::Zero(1, 1);
            imp.symmetric = true;
        }

        PdFitter fitter{ddata, schema, own_arity, edges, cfg.table.pseudocount};
        auto result = detail::greedy_core(imp, cfg.maxpars, cfg.k, fitter, nullptr);

        PseudoDiscreteNet net;
        net.schema = schema;
        net.f = f;
        net.map = map;
        net.boundaries = edges;
        net.structure.variables = imp.variables;
        net.structure.parents.resize(n);
        net.structure.maxpars = cfg.maxpars;
        net.nodes.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (const int p : result.parents[i]) {
                net.structure.parents[i].push_back(net.structure.variables[p]);
            }
            net.nodes[i].arity = own_arity[i];
            for (const int p : result.parents[i]) {
                net.nodes[i].parent_arities.push_back(own_arity[p]);
            }
            net.nodes[i].cpt = std::move(result.fits[i].cpt);
        }

        const double score = pseudo_discrete_bic(net, data);
        if (score > best_bic) {
            best_bic = score;
            best = std::move(net);
        }
    }
    return best;
}

double pseudo_discrete_log_density(const PseudoDiscreteNet& net, std::span<const double> row) {
    const Schema& schema = net.schema;
    if (row.size() != schema.size()) {
        throw std::invalid_argument("pseudo-discrete: row width mismatch");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < net.nodes.size(); ++i) {
        const auto& node = net.nodes[i];
        const std::size_t cell = pd_parent_cell(net, i, row);
        double term;
        if (schema.is_discrete(static_cast<int>(i))) {
            const int v = static_cast<int>(row[i]);
            if (v < 0 || v >= node.arity) {
                throw std::out_of_range("pseudo-discrete: discrete value out of range");
            }
            term = std::log(node.cpt[cell * node.arity + v]);
        } else {
            const int v = net.density_bucket(static_cast<int>(i), row[i]);
            term = std::log(node.cpt[cell * node.arity + v]) -
                   std::log(net.bucket_width(static_cast<int>(i), v));
        }
        total += std::max(term, kLogFloor);
    }
    return total;
}

double pseudo_discrete_log_likelihood(const PseudoDiscreteNet& net, const Dataset& data) {
    if (!(data.schema() == net.schema)) {
        throw std::invalid_argument("pseudo-discrete: schema mismatch");
    }
    std::vector<double> per_row(data.rows());
    parallel_for(data.rows(), [&](std::size_t r) {
        per_row[r] = pseudo_discrete_log_density(net, data.row(r));
    });
    double total = 0.0;
    for (const double v : per_row) total += v;
    return total;
}

double pseudo_discrete_bic(const PseudoDiscreteNet& net, const Dataset& data) {
    if (data.rows() == 0) throw std::invalid_argument("pseudo_discrete_bic: empty data");
    double params = 0.0;
    for (const auto& node : net.nodes) {
        double cells = 1.0;
        for (const int a : node.parent_arities) cells *= a;
        params += cells * (node.arity - 1);
    }
    return pseudo_discrete_log_likelihood(net, data) -
           0.5 * std::log(static_cast<double>(data.rows())) * params;
}

}  // namespace mixnet
