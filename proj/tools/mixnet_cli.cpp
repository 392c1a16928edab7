// mixnet: density estimation over mixed continuous/discrete tables.
//
// Commands: fit, score, eval, sample, synth-bucket, synth-model, importance.
// Exit codes: 0 success, 1 runtime or data error, 2 usage error.
// Every command takes --seed; there are no nondeterministic defaults.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <CLI11.hpp>

#include "mixnet/dataset.hpp"
#include "mixnet/harness.hpp"
#include "mixnet/learner.hpp"
#include "mixnet/network.hpp"
#include "mixnet/rng.hpp"
#include "mixnet/serialize.hpp"
#include "mixnet/structure.hpp"

namespace {

using namespace mixnet;

const std::vector<std::string> kLearnerNames = {"mixnet", "independent", "tree",
                                                "single-gaussian", "pseudo-discrete"};

std::string g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Flags shared by every command that fits models.
void add_config_flags(CLI::App* cmd, RunConfig& cfg) {
    cmd->add_option("--maxpars", cfg.search.maxpars, "Parent cap per node");
    cmd->add_option("--k", cfg.search.k, "Candidate parents evaluated per node");
    cmd->add_option("--importance-bins", cfg.search.importance_bins,
                    "Equal-frequency buckets for the importance pass");
    cmd->add_option("--components", cfg.search.table.em.component_grid,
                    "Mixture size grid searched per table cell")
        ->delimiter(',');
    cmd->add_option("--pseudocount", cfg.search.table.pseudocount,
                    "Additive smoothing for cell probabilities");
    cmd->add_option("--cov-floor", cfg.search.table.em.cov_floor,
                    "Eigenvalue floor for fitted covariances");
    cmd->add_option("--subsample-cap", cfg.subsample_cap, "Max rows used for fitting");
    cmd->add_option("--noise", cfg.noise.amplitude,
                    "Uniform jitter amplitude as a fraction of each column's range");
    cmd->add_option("--f-grid", cfg.f_grid, "Bucket-count grid for the pseudo-discrete learner")
        ->delimiter(',');
}

// Undoes the fitted [0, 1] scaling so emitted CSVs are in the data's units.
Dataset unscale(const Dataset& data, const ScalingTransform& transform,
                std::vector<std::vector<std::string>> symbols) {
    std::vector<double> cells = data.cells();
    const Schema& schema = data.schema();
    const std::size_t n = schema.size();
    for (std::size_t r = 0; r < data.rows(); ++r) {
        for (std::size_t c = 0; c < n; ++c) {
            if (schema.is_discrete(static_cast<int>(c))) continue;
            const auto& cs = transform.columns[c];
            double& x = cells[r * n + c];
            x = cs.constant ? cs.offset : cs.offset + x * cs.scale;
        }
    }
    return Dataset(schema, std::move(cells), std::move(symbols));
}

const MixNet& require_mixnet(const Model& model, const char* what) {
    const MixNet* net = std::get_if<MixNet>(&model.net.model);
    if (!net) {
        throw std::runtime_error(std::string(what) +
                                 " requires a mix-net format model; this model is pseudo-discrete");
    }
    return *net;
}

std::vector<std::int64_t> per_node_params(const FittedNet& net) {
    std::vector<std::int64_t> out;
    if (const MixNet* mn = std::get_if<MixNet>(&net.model)) {
        for (const auto& node : mn->nodes()) out.push_back(node_param_count(node.joint));
    } else {
        const auto& pd = std::get<PseudoDiscreteNet>(net.model);
        for (const auto& node : pd.nodes) {
            std::int64_t cells = 1;
            for (int a : node.parent_arities) cells *= a;
            out.push_back(cells * (node.arity - 1));
        }
    }
    return out;
}

void print_structure(const MixNetStructure& structure, const std::vector<std::int64_t>& params) {
    std::size_t arcs = 0;
    std::printf("arcs:\n");
    for (std::size_t child = 0; child < structure.parents.size(); ++child) {
        for (const std::string& p : structure.parents[child]) {
            std::printf("  %s -> %s\n", p.c_str(), structure.variables[child].c_str());
            ++arcs;
        }
    }
    if (arcs == 0) std::printf("  (none)\n");
    std::printf("node parameters:\n");
    for (std::size_t i = 0; i < params.size(); ++i) {
        std::printf("  %s: %lld\n", structure.variables[i].c_str(),
                    static_cast<long long>(params[i]));
    }
}

struct FitArgs {
    std::string learner = "mixnet";
    std::string data, schema, out;
    std::uint64_t seed = 0;
    RunConfig cfg;
};

void cmd_fit(const FitArgs& a) {
    const Schema schema = load_schema(a.schema);
    const Dataset raw = load_dataset(a.data, schema);

    RunConfig cfg = a.cfg;
    cfg.search.table.em.seed = a.seed;
    auto [train, scaling] = preprocess_fit(raw, cfg.noise, mix_seed(a.seed, "noise"));
    FittedNet net = fit_learner(parse_learner(a.learner), train, cfg);

    Model model{std::move(net), raw.symbols(), scaling, cfg};
    save_model(model, a.out);

    // Reported numbers go through the scoring transform (no jitter), so
    // `score` on the training file reproduces them exactly.
    const Dataset scored = apply_scaling(raw, scaling);
    const double ll = model.net.log_likelihood(scored);
    std::printf("learner: %s\n", learner_name(model.net.kind).c_str());
    std::printf("rows: %zu\n", raw.rows());
    std::printf("log-likelihood: %s\n", g17(ll).c_str());
    std::printf("bic: %s\n", g17(model.net.bic(scored)).c_str());
    std::printf("parameters: %lld\n", static_cast<long long>(model.net.parameter_total()));
    print_structure(model.net.structure(), per_node_params(model.net));
    std::printf("model: %s\n", a.out.c_str());
}

struct ScoreArgs {
    std::string model, data, out;
    std::uint64_t seed = 0;
    bool anomaly = false;
};

void cmd_score(const ScoreArgs& a) {
    const Model model = load_model(a.model);
    const Dataset raw = load_dataset(a.data, model.net.schema(), model.symbols);
    const Dataset scored = apply_scaling(raw, model.scaling);

    if (a.anomaly) {
        std::vector<std::pair<double, std::size_t>> rows(scored.rows());
        for (std::size_t r = 0; r < scored.rows(); ++r) {
            rows[r] = {-model.net.row_log_density(scored.row(r)), r};
        }
        std::sort(rows.begin(), rows.end(), [](const auto& x, const auto& y) {
            if (x.first != y.first) return x.first > y.first;
            return x.second < y.second;
        });
        std::ostringstream csv;
        csv << "row,anomaly\n";
        for (const auto& [score, r] : rows) csv << r << ',' << g17(score) << '\n';
        if (a.out.empty()) {
            std::fputs(csv.str().c_str(), stdout);
        } else {
            write_atomic(a.out, csv.str());
            std::printf("wrote %zu anomaly scores to %s\n", rows.size(), a.out.c_str());
        }
        return;
    }

    const double total = model.net.log_likelihood(scored);
    std::printf("rows: %zu\n", scored.rows());
    std::printf("total log-likelihood: %s\n", g17(total).c_str());
    std::printf("per-row log-likelihood: %s\n",
                g17(scored.rows() ? total / static_cast<double>(scored.rows()) : 0.0).c_str());
}

struct EvalArgs {
    std::string data, schema, out;
    std::vector<std::string> learners = kLearnerNames;
    std::uint64_t seed = 0;
    RunConfig cfg;
};

void cmd_eval(const EvalArgs& a) {
    const Schema schema = load_schema(a.schema);
    const Dataset raw = load_dataset(a.data, schema);
    std::vector<LearnerKind> kinds;
    for (const auto& name : a.learners) kinds.push_back(parse_learner(name));

    const EvalReport report = run_cv(raw, kinds, a.cfg.folds, a.seed, a.cfg);
    std::fputs(report_text(report).c_str(), stdout);
    if (!a.out.empty()) {
        save_report_json(report, a.out + ".json");
        save_report_text(report, a.out + ".txt");
        std::printf("wrote %s.json and %s.txt\n", a.out.c_str(), a.out.c_str());
    }
}

struct SampleArgs {
    std::string model, out;
    std::size_t n = 0;
    std::uint64_t seed = 0;
};

void cmd_sample(const SampleArgs& a) {
    const Model model = load_model(a.model);
    const MixNet& net = require_mixnet(model, "sample");
    const Dataset draws = sample_network(net, a.n, a.seed);
    save_csv(unscale(draws, model.scaling, model.symbols), a.out);
    std::printf("wrote %zu rows to %s\n", draws.rows(), a.out.c_str());
}

struct SynthBucketArgs {
    std::string data, schema, out;
    int f = 16;
    std::uint64_t seed = 0;
};

void cmd_synth_bucket(const SynthBucketArgs& a) {
    const Schema schema = load_schema(a.schema);
    const Dataset raw = load_dataset(a.data, schema);
    save_csv(synth_bucket_resample(raw, a.f, a.seed), a.out);
    std::printf("wrote %zu rows to %s\n", raw.rows(), a.out.c_str());
}

void cmd_synth_model(const SampleArgs& a) {
    const Model model = load_model(a.model);
    const MixNet& net = require_mixnet(model, "synth-model");
    const SynthResult res = synth_from_model(net, a.n, a.seed);
    save_csv(unscale(res.data, model.scaling, model.symbols), a.out);
    std::printf("wrote %zu rows to %s\n", res.data.rows(), a.out.c_str());
    std::printf("clamped continuous draws: %zu\n", res.clamped);
}

struct ImportanceArgs {
    std::string data, schema, out;
    std::uint64_t seed = 0;
    RunConfig cfg;
};

void cmd_importance(const ImportanceArgs& a) {
    const Schema schema = load_schema(a.schema);
    const Dataset raw = load_dataset(a.data, schema);

    // Mirrors the fit path so the exported matrix is the one a fit would use.
    RunConfig cfg = a.cfg;
    cfg.search.table.em.seed = a.seed;
    auto [train, scaling] = preprocess_fit(raw, cfg.noise, mix_seed(a.seed, "noise"));
    const Dataset sub =
        subsample(train, cfg.subsample_cap, mix_seed(cfg.search.table.em.seed, "subsample"));
    const ImportanceMatrix imp = importance_matrix(sub, cfg.search);
    export_importance_csv(imp, a.out);
    std::printf("wrote %zux%zu importance matrix to %s\n", imp.variables.size(),
                imp.variables.size(), a.out.c_str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mix-net density estimation over mixed continuous/discrete data"};
    app.require_subcommand(1);

    FitArgs fit_args;
    auto* fit = app.add_subcommand("fit", "Fit a model and write it as JSON");
    fit->add_option("--learner", fit_args.learner, "Learner kind")
        ->check(CLI::IsMember(kLearnerNames));
    fit->add_option("--data", fit_args.data, "Training CSV")->required();
    fit->add_option("--schema", fit_args.schema, "Schema JSON")->required();
    fit->add_option("--out", fit_args.out, "Output model path")->required();
    fit->add_option("--seed", fit_args.seed, "Random seed")->required();
    add_config_flags(fit, fit_args.cfg);
    fit->callback([&] { cmd_fit(fit_args); });

    ScoreArgs score_args;
    auto* score = app.add_subcommand("score", "Score a CSV under a saved model");
    score->add_option("--model", score_args.model, "Model JSON")->required();
    score->add_option("--data", score_args.data, "CSV to score")->required();
    score->add_option("--seed", score_args.seed, "Random seed")->required();
    score->add_option("--out", score_args.out, "Write anomaly CSV here instead of stdout");
    score->add_flag("--anomaly", score_args.anomaly,
                    "Emit per-row anomaly scores, sorted descending");
    score->callback([&] { cmd_score(score_args); });

    EvalArgs eval_args;
    auto* eval = app.add_subcommand("eval", "Cross-validated learner comparison");
    eval->add_option("--data", eval_args.data, "CSV to evaluate on")->required();
    eval->add_option("--schema", eval_args.schema, "Schema JSON")->required();
    eval->add_option("--learners", eval_args.learners, "Comma-separated learner list")
        ->delimiter(',')
        ->check(CLI::IsMember(kLearnerNames));
    eval->add_option("--folds", eval_args.cfg.folds, "Cross-validation folds");
    eval->add_option("--seed", eval_args.seed, "Random seed")->required();
    eval->add_option("--out", eval_args.out, "Report base path (writes .json and .txt)");
    add_config_flags(eval, eval_args.cfg);
    eval->callback([&] { cmd_eval(eval_args); });

    SampleArgs sample_args;
    auto* sample = app.add_subcommand("sample", "Draw rows from a saved model");
    sample->add_option("--model", sample_args.model, "Model JSON")->required();
    sample->add_option("--n", sample_args.n, "Row count")->required();
    sample->add_option("--seed", sample_args.seed, "Random seed")->required();
    sample->add_option("--out", sample_args.out, "Output CSV")->required();
    sample->callback([&] { cmd_sample(sample_args); });

    SynthBucketArgs sb_args;
    auto* synth_bucket = app.add_subcommand(
        "synth-bucket", "Resample a CSV uniformly within equal-frequency buckets");
    synth_bucket->add_option("--data", sb_args.data, "Source CSV")->required();
    synth_bucket->add_option("--schema", sb_args.schema, "Schema JSON")->required();
    synth_bucket->add_option("--f", sb_args.f, "Buckets per variable");
    synth_bucket->add_option("--seed", sb_args.seed, "Random seed")->required();
    synth_bucket->add_option("--out", sb_args.out, "Output CSV")->required();
    synth_bucket->callback([&] { cmd_synth_bucket(sb_args); });

    SampleArgs sm_args;
    auto* synth_model =
        app.add_subcommand("synth-model", "Ancestral samples from a saved model, clamped to range");
    synth_model->add_option("--model", sm_args.model, "Model JSON")->required();
    synth_model->add_option("--n", sm_args.n, "Row count")->required();
    synth_model->add_option("--seed", sm_args.seed, "Random seed")->required();
    synth_model->add_option("--out", sm_args.out, "Output CSV")->required();
    synth_model->callback([&] { cmd_synth_model(sm_args); });

    ImportanceArgs imp_args;
    auto* importance = app.add_subcommand("importance", "Export the pairwise importance matrix");
    importance->add_option("--data", imp_args.data, "Training CSV")->required();
    importance->add_option("--schema", imp_args.schema, "Schema JSON")->required();
    importance->add_option("--seed", imp_args.seed, "Random seed")->required();
    importance->add_option("--out", imp_args.out, "Output CSV")->required();
    add_config_flags(importance, imp_args.cfg);
    importance->callback([&] { cmd_importance(imp_args); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
