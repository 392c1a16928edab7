#include "mixnet/learner.hpp"

#include <stdexcept>

#include "mixnet/rng.hpp"

namespace mixnet {

std::string learner_name(LearnerKind kind) {
    switch (kind) {
        case LearnerKind::mixnet: return "mixnet";
        case LearnerKind::independent: return "independent";
        case LearnerKind::tree: return "tree";
        case LearnerKind::single_gaussian: return "single-gaussian";
        case LearnerKind::pseudo_discrete: return "pseudo-discrete";
    }
    throw std::logic_error("unreachable");
}

LearnerKind parse_learner(const std::string& name) {
    if (name == "mixnet") return LearnerKind::mixnet;
    if (name == "independent") return LearnerKind::independent;
    if (name == "tree") return LearnerKind::tree;
    if (name == "single-gaussian") return LearnerKind::single_gaussian;
    if (name == "pseudo-discrete") return LearnerKind::pseudo_discrete;
    throw std::invalid_argument("unknown learner '" + name + "'");
}

const Schema& FittedNet::schema() const {
    if (const auto* net = std::get_if<MixNet>(&model)) return net->schema();
    return std::get<PseudoDiscreteNet>(model).schema;
}

double FittedNet::row_log_density(std::span<const double> row) const {
    if (const auto* net = std::get_if<MixNet>(&model)) return net->row_log_density(row);
    return pseudo_discrete_log_density(std::get<PseudoDiscreteNet>(model), row);
}

double FittedNet::log_likelihood(const Dataset& data) const {
    if (const auto* net = std::get_if<MixNet>(&model)) return mixnet::log_likelihood(*net, data);
    return pseudo_discrete_log_likelihood(std::get<PseudoDiscreteNet>(model), data);
}

double FittedNet::bic(const Dataset& data) const {
    if (const auto* net = std::get_if<MixNet>(&model)) return network_bic(*net, data);
    return pseudo_discrete_bic(std::get<PseudoDiscreteNet>(model), data);
}

std::int64_t FittedNet::parameter_total() const {
    if (const auto* net = std::get_if<MixNet>(&model)) {
        std::int64_t total = 0;
        for (const auto& node : net->nodes()) total += node_param_count(node.joint);
        return total;
    }
    const auto& pd = std::get<PseudoDiscreteNet>(model);
    std::int64_t total = 0;
    for (const auto& node : pd.nodes) {
        std::int64_t cells = 1;
        for (const int a : node.parent_arities) cells *= a;
        total += cells * (node.arity - 1);
    }
    return total;
}

const MixNetStructure& FittedNet::structure() const {
    if (const auto* net = std::get_if<MixNet>(&model)) return net->structure();
    return std::get<PseudoDiscreteNet>(model).structure;
}

FittedNet fit_learner(LearnerKind kind, const Dataset& train, const RunConfig& config) {
    FittedNet fitted;
    fitted.kind = kind;

    if (kind == LearnerKind::single_gaussian) {
        fitted.model = fit_single_gaussian_net(train, config.search);
        return fitted;
    }

    const Dataset sub = subsample(train, config.subsample_cap,
                                  mix_seed(config.search.table.em.seed, "subsample"));
    switch (kind) {
        case LearnerKind::mixnet: {
            if (sub.schema().size() < 2) {
                MixNetStructure s;
                s.variables.push_back(sub.schema().columns[0].name);
                s.parents.resize(1);
                fitted.model = fit_parameters(s, sub, config.search.table);
                break;
            }
            const ImportanceMatrix imp = importance_matrix(sub, config.search);
            fitted.model = greedy_search(sub, imp, config.search);
            break;
        }
        case LearnerKind::independent:
            fitted.model = fit_independent(sub, config.search);
            break;
        case LearnerKind::tree:
            fitted.model = fit_tree(sub, config.search);
            break;
        case LearnerKind::pseudo_discrete:
            fitted.model = fit_pseudo_discrete(sub, config.f_grid, config.search);
            break;
        case LearnerKind::single_gaussian:
            break;  // handled above
    }
    return fitted;
}

}  // namespace mixnet
