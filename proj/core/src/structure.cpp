#include "mixnet/structure.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "mixnet/parallel.hpp"

namespace mixnet {

namespace {

constexpr double kLogFloor = -700.0;

struct TableBinding {
    std::vector<int> q_cols, c_cols;
};

TableBinding bind_columns(const MixtureTable& table, const Schema& schema) {
    TableBinding b;
    for (const auto& name : table.discrete_variables()) b.q_cols.push_back(schema.index_of(name));
    for (const auto& name : table.continuous_variables()) b.c_cols.push_back(schema.index_of(name));
    return b;
}

double clamped_term(const MixtureTable& table, const TableBinding& bind,
                    std::span<const double> row) {
    std::vector<int> q(bind.q_cols.size());
    for (std::size_t i = 0; i < bind.q_cols.size(); ++i) {
        q[i] = static_cast<int>(row[bind.q_cols[i]]);
    }
    Eigen::VectorXd c(static_cast<Eigen::Index>(bind.c_cols.size()));
    for (std::size_t i = 0; i < bind.c_cols.size(); ++i) {
        c(static_cast<Eigen::Index>(i)) = row[bind.c_cols[i]];
    }
    return std::max(table.log_density(q, c), kLogFloor);
}

struct NodeFit {
    MixtureTable joint;
    MixtureTable parent_marginal;
    double node_bic = 0.0;
};

NodeFit fit_node(const Dataset& data, int child, const std::vector<int>& parent_ids,
                 const TableConfig& config) {
    const Schema& schema = data.schema();
    std::vector<std::string> members{schema.columns[child].name};
    for (const int p : parent_ids) members.push_back(schema.columns[p].name);
    std::vector<std::string> q, c;
    for (const auto& name : members) {
        if (schema.is_discrete(schema.index_of(name))) {
            q.push_back(name);
        } else {
            c.push_back(name);
        }
    }
    NodeFit fit;
    fit.joint = fit_table(data, q, c, config);
    fit.parent_marginal = marginalize_out(fit.joint, schema.columns[child].name);
    fit.node_bic = node_conditional_ll(fit.joint, fit.parent_marginal, data) -
                   0.5 * std::log(static_cast<double>(data.rows())) *
                       static_cast<double>(node_param_count(fit.joint));
    return fit;
}

Dataset importance_view(const Dataset& data, const SearchConfig& config) {
    if (!config.discretize_importance) return data;
    return discretize_equal_frequency(data, config.importance_bins).second;
}

}  // namespace

double node_conditional_ll(const MixtureTable& joint, const MixtureTable& parent_marginal,
                           const Dataset& data) {
    const TableBinding joint_bind = bind_columns(joint, data.schema());
    const TableBinding marginal_bind = bind_columns(parent_marginal, data.schema());
    std::vector<double> per_row(data.rows());
    parallel_for(data.rows(), [&](std::size_t r) {
        per_row[r] = clamped_term(joint, joint_bind, data.row(r)) -
                     clamped_term(parent_marginal, marginal_bind, data.row(r));
    });
    double total = 0.0;
    for (const double v : per_row) total += v;
    return total;
}

double importance(const Dataset& data, int i, int j, const SearchConfig& config) {
    if (i == j) throw std::invalid_argument("importance: i and j must differ");
    const Dataset view = importance_view(data, config);
    const NodeFit with = fit_node(view, j, {i}, config.table);
    const NodeFit without = fit_node(view, j, {}, config.table);
    return with.node_bic - without.node_bic;
}

ImportanceMatrix importance_matrix(const Dataset& data, const SearchConfig& config) {
    const std::size_t n = data.schema().size();
    if (n < 2) throw std::invalid_argument("importance_matrix: need at least two variables");
    const Dataset view = importance_view(data, config);

    ImportanceMatrix imp;
    for (const auto& col : data.schema().columns) imp.variables.push_back(col.name);
    imp.values = Eigen::MatrixXd::Zero(n, n);
    imp.symmetric = config.assume_symmetric;
    imp.discretized = config.discretize_importance;
    imp.bins = config.discretize_importance ? config.importance_bins : 0;

    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < static_cast<int>(n); ++i) {
        for (int j = 0; j < static_cast<int>(n); ++j) {
            if (i == j) continue;
            if (config.assume_symmetric && i > j) continue;
            pairs.emplace_back(i, j);
        }
    }
    // Base fits (no parents) are shared across pairs with the same child.
    std::vector<double> base_bic(n);
    parallel_for(n, [&](std::size_t j) {
        base_bic[j] = fit_node(view, static_cast<int>(j), {}, config.table).node_bic;
    });
    parallel_for(pairs.size(), [&](std::size_t idx) {
        const auto [i, j] = pairs[idx];
        const NodeFit with = fit_node(view, j, {i}, config.table);
        imp.values(i, j) = with.node_bic - base_bic[j];
    });
    if (config.assume_symmetric) {
        for (int i = 0; i < static_cast<int>(n); ++i) {
            for (int j = i + 1; j < static_cast<int>(n); ++j) imp.values(j, i) = imp.values(i, j);
        }
    }
    return imp;
}

MixNet greedy_search(const Dataset& data, const ImportanceMatrix& imp, const SearchConfig& config,
                     GreedyTrace* trace) {
    if (static_cast<std::size_t>(imp.values.rows()) != data.schema().size() ||
        imp.values.rows() != imp.values.cols()) {
        throw std::invalid_argument("greedy_search: importance matrix does not match schema");
    }
    auto result = detail::greedy_core(
        imp, config.maxpars, config.k,
        [&](int child, const std::vector<int>& parent_ids) {
            return fit_node(data, child, parent_ids, config.table);
        },
        trace);

    MixNetStructure structure;
    for (const auto& col : data.schema().columns) structure.variables.push_back(col.name);
    structure.parents.resize(structure.variables.size());
    structure.maxpars = config.maxpars;
    std::vector<MixNetNode> nodes(structure.variables.size());
    for (std::size_t i = 0; i < structure.variables.size(); ++i) {
        for (const int p : result.parents[i]) {
            structure.parents[i].push_back(structure.variables[p]);
        }
        nodes[i].joint = std::move(result.fits[i].joint);
        nodes[i].parent_marginal = std::move(result.fits[i].parent_marginal);
    }
    return MixNet(data.schema(), structure, std::move(nodes));
}

MixNetStructure max_spanning_forest(const ImportanceMatrix& imp) {
    if (!imp.symmetric) throw std::invalid_argument("max_spanning_forest: matrix must be symmetric");
    const int n = static_cast<int>(imp.values.rows());

    struct Edge {
        double weight;
        int a, b;
    };
    std::vector<Edge> edges;
    for (int a = 0; a < n; ++a) {
        for (int b = a + 1; b < n; ++b) {
            if (imp.values(a, b) > 0) edges.push_back({imp.values(a, b), a, b});
        }
    }
    std::sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) {
        if (x.weight != y.weight) return x.weight > y.weight;
        if (x.a != y.a) return x.a < y.a;
        return x.b < y.b;
    });

    std::vector<int> root(n);
    std::iota(root.begin(), root.end(), 0);
    const auto find = [&](int v) {
        while (root[v] != v) v = root[v] = root[root[v]];
        return v;
    };
    std::vector<std::vector<int>> adjacency(n);
    for (const auto& e : edges) {
        const int ra = find(e.a);
        const int rb = find(e.b);
        if (ra == rb) continue;
        root[std::max(ra, rb)] = std::min(ra, rb);
        adjacency[e.a].push_back(e.b);
        adjacency[e.b].push_back(e.a);
    }

    // Orient each tree away from its lowest-index vertex.
    MixNetStructure structure;
    structure.variables = imp.variables;
    structure.parents.resize(n);
    structure.maxpars = 1;
    std::vector<bool> visited(n, false);
    for (int start = 0; start < n; ++start) {
        if (visited[start]) continue;
        std::vector<int> frontier{start};
        visited[start] = true;
        while (!frontier.empty()) {
            const int v = frontier.back();
            frontier.pop_back();
            for (const int u : adjacency[v]) {
                if (visited[u]) continue;
                visited[u] = true;
                structure.parents[u].push_back(imp.variables[v]);
                frontier.push_back(u);
            }
        }
    }
    return structure;
}

void export_importance_csv(const ImportanceMatrix& imp, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << "variable";
    for (const auto& name : imp.variables) out << ',' << name;
    out << '\n';
    out.precision(17);
    for (Eigen::Index i = 0; i < imp.values.rows(); ++i) {
        out << imp.variables[i];
        for (Eigen::Index j = 0; j < imp.values.cols(); ++j) {
            out << ',';
            if (i != j) out << imp.values(i, j);
        }
        out << '\n';
    }
}

void export_arc_list(const MixNetStructure& structure, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    for (std::size_t i = 0; i < structure.variables.size(); ++i) {
        for (const auto& p : structure.parents[i]) {
            out << p << " -> " << structure.variables[i] << '\n';
        }
    }
}

}  // namespace mixnet
