#pragma once

#include <string>
#include <vector>

#include "mixnet/dataset.hpp"
#include "mixnet/harness.hpp"
#include "mixnet/learner.hpp"

namespace mixnet {

// A fitted net plus everything needed to score new files: the schema, the
// discrete symbol maps, the fitted scaling transform, and the config echo.
struct Model {
    FittedNet net;
    std::vector<std::vector<std::string>> symbols;
    ScalingTransform scaling;
    RunConfig config;
};

// JSON with format tag "mixnet-1" or "pseudodiscrete-1" depending on the
// learner. Doubles survive the round trip bit-exactly, so loading a model and
// rescoring reproduces fit-time numbers.
void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);

void save_report_json(const EvalReport& report, const std::string& path);

// Aligned fixed-order text table, one learner per row, mean +/- stddev of the
// mean plus the per-row average.
std::string report_text(const EvalReport& report);
void save_report_text(const EvalReport& report, const std::string& path);

// Writes to a sibling temp file and renames over the target.
void write_atomic(const std::string& path, const std::string& content);

}  // namespace mixnet
