#pragma once

// Structured (JSON) and flat (CSV) renderings of every result type. CSV floats
// use 17 significant digits with '.' as decimal separator.

#include <string>
#include <vector>

#include <json.hpp>

#include "superlab/classifier.hpp"
#include "superlab/fluctlab.hpp"
#include "superlab/model.hpp"
#include "superlab/moments.hpp"
#include "superlab/semigroup.hpp"
#include "superlab/simulator.hpp"

namespace superlab {

using Json = nlohmann::ordered_json;

/// %.17g, independent of the C locale.
std::string format_double(double x);

Json to_json(const ValidationReport& rep);
Json to_json(const SpectralData& spec);
Json to_json(const Classification& cls);
Json to_json(const LimitLawPrediction& pr);
Json to_json(const ExperimentResult& res);
Json to_json(const AsymptoteTable& table);

inline const char* kResultsCsvHeader = "experiment,quantity,time,empirical,stderr,predicted,pass";

/// Header plus one line per row, in the order given.
std::string results_csv(const std::vector<ExperimentResult>& results);

/// `replica,time,type_1..type_K,W`, replicas in index order, record times ascending.
std::string ensemble_csv(const Ensemble& ens);

/// Sidecar for an ensemble dump: model hash, seeds, dt, clamping counts.
Json ensemble_metadata(const Ensemble& ens, const std::string& model_hash);

/// Write `content` to `path`, throwing ConfigError on failure.
void write_text_file(const std::string& path, const std::string& content);

}  // namespace superlab
