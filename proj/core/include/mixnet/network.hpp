#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mixnet/dataset.hpp"
#include "mixnet/mixture_table.hpp"

namespace mixnet {

// Directed acyclic structure over the schema's variables.
struct MixNetStructure {
    std::vector<std::string> variables;
    std::vector<std::vector<std::string>> parents;  // parallel to variables
    int maxpars = 0;                                // recorded search cap

    // Indices of variables in a valid evaluation order (parents first).
    // Throws std::invalid_argument on a cycle.
    std::vector<std::size_t> topological_order() const;

    // Checks variables match the schema and all parent names resolve.
    void validate(const Schema& schema) const;

    std::size_t arc_count() const;
};

struct MixNetNode {
    MixtureTable joint;            // over {X_i} and its parents
    MixtureTable parent_marginal;  // the joint with X_i summed/integrated out
};

// A fitted mix-net. Each node's conditional density is evaluated as the ratio
// of its joint table to its parent-marginal table; the marginal is derived
// from the joint at fit time, which is what keeps the overall model
// consistent even though node tables are fitted independently.
class MixNet {
public:
    MixNet() = default;
    MixNet(Schema schema, MixNetStructure structure, std::vector<MixNetNode> nodes);

    const Schema& schema() const { return schema_; }
    const MixNetStructure& structure() const { return structure_; }
    const std::vector<MixNetNode>& nodes() const { return nodes_; }

    // Sum over nodes of the clamped conditional log-densities at this row.
    double row_log_density(std::span<const double> row) const;

    // Contribution of one node to row_log_density (same clamping).
    double node_log_density(std::size_t node, std::span<const double> row) const;

    // Number of table evaluations that fell below exp(-700) and were clamped
    // since construction (or the last reset). Shared across copies.
    std::uint64_t clamp_events() const { return clamp_events_->load(); }
    void reset_clamp_events() const { clamp_events_->store(0); }

private:
    Schema schema_;
    MixNetStructure structure_;
    std::vector<MixNetNode> nodes_;
    // Per node: schema columns behind each table's discrete/continuous slots.
    struct NodeColumns {
        std::vector<int> joint_q, joint_c, marginal_q, marginal_c;
    };
    std::vector<NodeColumns> columns_;
    std::shared_ptr<std::atomic<std::uint64_t>> clamp_events_ =
        std::make_shared<std::atomic<std::uint64_t>>(0);

    double table_term(const MixtureTable& table, const std::vector<int>& q_cols,
                      const std::vector<int>& c_cols, std::span<const double> row) const;
};

// Joint-table parameters of one node: (cells - 1) + per-cell mixture
// parameters. The derived parent marginal is not counted.
std::int64_t node_param_count(const MixtureTable& joint);

// Fits every node's joint table on {X_i} + parents, then derives the parent
// marginal by marginalizing X_i out. Deterministic given config.em.seed.
MixNet fit_parameters(const MixNetStructure& structure, const Dataset& data,
                      const TableConfig& config);

double log_likelihood(const MixNet& net, const Dataset& data);

// log_likelihood minus (ln R / 2) times the summed node parameter counts.
double network_bic(const MixNet& net, const Dataset& data);

// Ancestral sampling: nodes in topological order; discrete nodes draw from the
// renormalized joint-table density across their values, continuous nodes draw
// from their cell mixture conditioned on the sampled continuous parents.
Dataset sample_network(const MixNet& net, std::size_t n, std::uint64_t seed);

// Negative row log-density; higher means more anomalous.
double anomaly_score(const MixNet& net, std::span<const double> row);

}  // namespace mixnet
