#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "pas/dataset.hpp"
#include "pas/evaluation.hpp"
#include "pas/probes.hpp"
#include "pas/steering.hpp"
#include "pas/toy_model.hpp"

namespace pas {

using nlohmann::json;

json profile_to_json(const TraitProfile& profile);
/// Accepts {"Agreeableness": 3.5, ...} with all five traits, or a 5-element array in trait order.
TraitProfile profile_from_json(const json& j);

json steering_set_to_json(const SteeringSet& set);
SteeringSet steering_set_from_json(const json& j);

json alignment_to_json(const AlignmentResult& result);
AlignmentResult alignment_from_json(const json& j);

json report_to_json(const AlignedScoreReport& report);

json answers_to_json(const AnswerMap& answers);
/// Values may be option strings ("Very Accurate") or response values 1..5.
AnswerMap answers_from_json(const json& j);

json subject_to_json(const SubjectRecord& subject);
SubjectRecord subject_from_json(const json& j);

json cluster_to_json(const ClusterSelection& selection);
json toy_truth_to_json(const ToyGroundTruth& truth);

/// Pretty-printed with a trailing newline; the byte form used for every artifact.
std::string dump(const json& j);
void write_json_file(const std::filesystem::path& path, const json& j);
json read_json_file(const std::filesystem::path& path);
/// Writes through a sibling temporary file and renames it into place.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace pas
