#include "mixnet/serialize.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace mixnet {

namespace {

using nlohmann::json;

json schema_to_json(const Schema& schema) {
    json out = json::array();
    for (const auto& col : schema.columns) {
        json j{{"name", col.name},
               {"kind", col.kind == ColumnKind::discrete ? "discrete" : "continuous"}};
        if (col.kind == ColumnKind::discrete) j["arity"] = col.arity;
        out.push_back(std::move(j));
    }
    return out;
}

Schema schema_from_json(const json& j) {
    Schema schema;
    for (const auto& entry : j) {
        Column col;
        col.name = entry.at("name").get<std::string>();
        const auto kind = entry.at("kind").get<std::string>();
        if (kind == "discrete") {
            col.kind = ColumnKind::discrete;
            col.arity = entry.at("arity").get<int>();
        } else if (kind == "continuous") {
            col.kind = ColumnKind::continuous;
        } else {
            throw std::runtime_error("model: unknown column kind '" + kind + "'");
        }
        schema.columns.push_back(std::move(col));
    }
    schema.validate();
    return schema;
}

json mixture_to_json(const GaussianMixture& gm) {
    json comps = json::array();
    const auto d = static_cast<Eigen::Index>(gm.dimension());
    for (const auto& c : gm.components()) {
        json mean = json::array();
        for (Eigen::Index i = 0; i < d; ++i) mean.push_back(c.mean(i));
        json cov = json::array();  // row-major lower triangle
        for (Eigen::Index i = 0; i < d; ++i) {
            for (Eigen::Index j = 0; j <= i; ++j) cov.push_back(c.covariance(i, j));
        }
        comps.push_back(json{{"w", c.weight}, {"mean", std::move(mean)}, {"cov", std::move(cov)}});
    }
    return json{{"components", std::move(comps)}};
}

GaussianMixture mixture_from_json(const json& j, const std::vector<std::string>& variables) {
    const auto d = static_cast<Eigen::Index>(variables.size());
    std::vector<GaussianComponent> comps;
    for (const auto& entry : j.at("components")) {
        GaussianComponent c;
        c.weight = entry.at("w").get<double>();
        c.mean.resize(d);
        const auto& mean = entry.at("mean");
        for (Eigen::Index i = 0; i < d; ++i) c.mean(i) = mean.at(i).get<double>();
        c.covariance.resize(d, d);
        const auto& cov = entry.at("cov");
        std::size_t k = 0;
        for (Eigen::Index i = 0; i < d; ++i) {
            for (Eigen::Index j2 = 0; j2 <= i; ++j2) {
                const double v = cov.at(k++).get<double>();
                c.covariance(i, j2) = v;
                c.covariance(j2, i) = v;
            }
        }
        comps.push_back(std::move(c));
    }
    return GaussianMixture(variables, std::move(comps));
}

json table_to_json(const MixtureTable& table) {
    json cells = json::array();
    for (std::size_t cell = 0; cell < table.cell_count(); ++cell) {
        cells.push_back(
            json{{"p", table.prob(cell)}, {"mixture", mixture_to_json(table.mixture(cell))}});
    }
    return json{{"discrete", table.discrete_variables()},
                {"arities", table.arities()},
                {"continuous", table.continuous_variables()},
                {"cells", std::move(cells)}};
}

MixtureTable table_from_json(const json& j) {
    const auto discrete = j.at("discrete").get<std::vector<std::string>>();
    const auto arities = j.at("arities").get<std::vector<int>>();
    const auto continuous = j.at("continuous").get<std::vector<std::string>>();
    std::vector<double> probs;
    std::vector<std::shared_ptr<const GaussianMixture>> mixtures;
    for (const auto& cell : j.at("cells")) {
        probs.push_back(cell.at("p").get<double>());
        mixtures.push_back(std::make_shared<const GaussianMixture>(
            mixture_from_json(cell.at("mixture"), continuous)));
    }
    return MixtureTable(discrete, arities, continuous, std::move(probs), std::move(mixtures));
}

json structure_to_json(const MixNetStructure& s) {
    return json{{"variables", s.variables}, {"parents", s.parents}, {"maxpars", s.maxpars}};
}

MixNetStructure structure_from_json(const json& j) {
    MixNetStructure s;
    s.variables = j.at("variables").get<std::vector<std::string>>();
    s.parents = j.at("parents").get<std::vector<std::vector<std::string>>>();
    s.maxpars = j.at("maxpars").get<int>();
    return s;
}

json scaling_to_json(const ScalingTransform& t) {
    json out = json::array();
    for (const auto& c : t.columns) {
        out.push_back(json{{"offset", c.offset}, {"scale", c.scale}, {"constant", c.constant}});
    }
    return out;
}

ScalingTransform scaling_from_json(const json& j) {
    ScalingTransform t;
    for (const auto& entry : j) {
        ScalingTransform::ColumnScale c;
        c.offset = entry.at("offset").get<double>();
        c.scale = entry.at("scale").get<double>();
        c.constant = entry.at("constant").get<bool>();
        t.columns.push_back(c);
    }
    return t;
}

json config_to_json(const RunConfig& c) {
    return json{
        {"search",
         {{"maxpars", c.search.maxpars},
          {"k", c.search.k},
          {"assume_symmetric", c.search.assume_symmetric},
          {"discretize_importance", c.search.discretize_importance},
          {"importance_bins", c.search.importance_bins},
          {"table",
           {{"pseudocount", c.search.table.pseudocount},
            {"min_cell_rows", c.search.table.min_cell_rows},
            {"em",
             {{"max_iterations", c.search.table.em.max_iterations},
              {"rel_tol", c.search.table.em.rel_tol},
              {"restarts", c.search.table.em.restarts},
              {"cov_floor", c.search.table.em.cov_floor},
              {"component_grid", c.search.table.em.component_grid},
              {"seed", c.search.table.em.seed}}}}}}},
        {"f_grid", c.f_grid},
        {"subsample_cap", c.subsample_cap},
        {"noise", {{"amplitude", c.noise.amplitude}, {"fraction_of_range", c.noise.fraction_of_range}}},
        {"folds", c.folds}};
}

RunConfig config_from_json(const json& j) {
    RunConfig c;
    const auto& s = j.at("search");
    c.search.maxpars = s.at("maxpars").get<int>();
    c.search.k = s.at("k").get<int>();
    c.search.assume_symmetric = s.at("assume_symmetric").get<bool>();
    c.search.discretize_importance = s.at("discretize_importance").get<bool>();
    c.search.importance_bins = s.at("importance_bins").get<int>();
    const auto& t = s.at("table");
    c.search.table.pseudocount = t.at("pseudocount").get<double>();
    c.search.table.min_cell_rows = t.at("min_cell_rows").get<int>();
    const auto& em = t.at("em");
    c.search.table.em.max_iterations = em.at("max_iterations").get<int>();
    c.search.table.em.rel_tol = em.at("rel_tol").get<double>();
    c.search.table.em.restarts = em.at("restarts").get<int>();
    c.search.table.em.cov_floor = em.at("cov_floor").get<double>();
    c.search.table.em.component_grid = em.at("component_grid").get<std::vector<int>>();
    c.search.table.em.seed = em.at("seed").get<std::uint64_t>();
    c.f_grid = j.at("f_grid").get<std::vector<int>>();
    c.subsample_cap = j.at("subsample_cap").get<std::size_t>();
    c.noise.amplitude = j.at("noise").at("amplitude").get<double>();
    c.noise.fraction_of_range = j.at("noise").at("fraction_of_range").get<bool>();
    c.folds = j.at("folds").get<int>();
    return c;
}

}  // namespace

void write_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write '" + tmp + "'");
        out << content;
        if (!out) throw std::runtime_error("write failed for '" + tmp + "'");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw std::runtime_error("cannot rename '" + tmp + "' to '" + path + "'");
    }
}

void save_model(const Model& model, const std::string& path) {
    json j;
    j["learner"] = learner_name(model.net.kind);
    j["schema"] = schema_to_json(model.net.schema());
    j["symbols"] = model.symbols;
    j["scaling"] = scaling_to_json(model.scaling);
    j["config"] = config_to_json(model.config);
    j["structure"] = structure_to_json(model.net.structure());

    if (const auto* net = std::get_if<MixNet>(&model.net.model)) {
        j["format"] = "mixnet-1";
        json nodes = json::array();
        std::int64_t joint_params = 0;
        std::int64_t conditional_params = 0;
        for (const auto& node : net->nodes()) {
            nodes.push_back(json{{"joint", table_to_json(node.joint)},
                                 {"parent_marginal", table_to_json(node.parent_marginal)}});
            joint_params += node_param_count(node.joint);
            conditional_params += node_param_count(node.joint) - param_count(node.parent_marginal);
        }
        j["nodes"] = std::move(nodes);
        // Both counts recorded: the joint convention (used by BIC) double
        // counts parent parameters across nodes, the conditional one does not.
        j["param_counts"] = {{"joint", joint_params}, {"conditional", conditional_params}};
    } else {
        const auto& pd = std::get<PseudoDiscreteNet>(model.net.model);
        j["format"] = "pseudodiscrete-1";
        j["f"] = pd.f;
        j["cuts"] = pd.map.cuts;
        j["boundaries"] = pd.boundaries;
        json nodes = json::array();
        for (const auto& node : pd.nodes) {
            nodes.push_back(json{{"arity", node.arity},
                                 {"parent_arities", node.parent_arities},
                                 {"cpt", node.cpt}});
        }
        j["nodes"] = std::move(nodes);
        j["param_counts"] = {{"cpt", model.net.parameter_total()}};
    }
    write_atomic(path, j.dump(2) + "\n");
}

Model load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read '" + path + "'");
    json j;
    in >> j;

    const auto format = j.at("format").get<std::string>();
    Model model;
    model.net.kind = parse_learner(j.at("learner").get<std::string>());
    model.symbols = j.at("symbols").get<std::vector<std::vector<std::string>>>();
    model.scaling = scaling_from_json(j.at("scaling"));
    model.config = config_from_json(j.at("config"));

    const Schema schema = schema_from_json(j.at("schema"));
    const MixNetStructure structure = structure_from_json(j.at("structure"));

    if (format == "mixnet-1") {
        std::vector<MixNetNode> nodes;
        for (const auto& entry : j.at("nodes")) {
            MixNetNode node;
            node.joint = table_from_json(entry.at("joint"));
            node.parent_marginal = table_from_json(entry.at("parent_marginal"));
            nodes.push_back(std::move(node));
        }
        model.net.model = MixNet(schema, structure, std::move(nodes));
    } else if (format == "pseudodiscrete-1") {
        PseudoDiscreteNet pd;
        pd.schema = schema;
        pd.structure = structure;
        pd.f = j.at("f").get<int>();
        pd.map.cuts = j.at("cuts").get<std::vector<std::vector<double>>>();
        pd.boundaries = j.at("boundaries").get<std::vector<std::vector<double>>>();
        for (const auto& entry : j.at("nodes")) {
            PseudoDiscreteNet::Node node;
            node.arity = entry.at("arity").get<int>();
            node.parent_arities = entry.at("parent_arities").get<std::vector<int>>();
            node.cpt = entry.at("cpt").get<std::vector<double>>();
            pd.nodes.push_back(std::move(node));
        }
        model.net.model = std::move(pd);
    } else {
        throw std::runtime_error("model: unknown format '" + format + "'");
    }
    return model;
}

void save_report_json(const EvalReport& report, const std::string& path) {
    json learners = json::array();
    for (const auto& lr : report.learners) {
        learners.push_back(json{{"learner", lr.learner},
                                {"fold_total_ll", lr.fold_total_ll},
                                {"fold_test_rows", lr.fold_test_rows},
                                {"mean", lr.mean},
                                {"stddev_of_mean", lr.stddev_of_mean},
                                {"stddev_folds", lr.stddev_folds},
                                {"mean_per_row", lr.mean_per_row}});
    }
    const json j{{"format", "mixnet-report-1"},
                 {"folds", report.folds},
                 {"seed", report.seed},
                 {"config", config_to_json(report.config)},
                 {"uncertainty", "stddev_of_mean = stddev(folds)/sqrt(folds); "
                                 "stddev_folds is the unscaled alternative"},
                 {"learners", std::move(learners)}};
    write_atomic(path, j.dump(2) + "\n");
}

std::string report_text(const EvalReport& report) {
    std::ostringstream out;
    std::size_t name_width = 7;  // "learner"
    for (const auto& lr : report.learners) name_width = std::max(name_width, lr.learner.size());

    char line[256];
    std::snprintf(line, sizeof(line), "%-*s  %16s     %-16s %12s\n",
                  static_cast<int>(name_width), "learner", "mean total ll", "stddev of mean",
                  "per row");
    out << line;
    for (const auto& lr : report.learners) {
        std::snprintf(line, sizeof(line), "%-*s  %16.3f +/- %-16.3f %12.5f\n",
                      static_cast<int>(name_width), lr.learner.c_str(), lr.mean,
                      lr.stddev_of_mean, lr.mean_per_row);
        out << line;
    }
    return out.str();
}

void save_report_text(const EvalReport& report, const std::string& path) {
    write_atomic(path, report_text(report));
}

}  // namespace mixnet
