// Copyright (c) szbf contributors.
// SPDX-License-Identifier: MIT
#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "szbf/check.hpp"
#include "szbf/model.hpp"
#include "szbf/simulate.hpp"
#include "szbf/stability.hpp"

namespace szbf {

inline constexpr int kSchemaVersion = 1;
inline constexpr std::string_view kToolName = "szbf";
inline constexpr std::string_view kToolVersion = "0.1.0";

/// JSON documents carry schema_version, a kind tag, and a tool block
/// (name, version, pinned RNG). Serialization is deterministic: keys are
/// sorted and no timestamp is included — stamp_generated_at adds the one
/// field allowed to differ between identical runs.
nlohmann::json to_json(const RegularityEstimate& est);
nlohmann::json to_json(const ConditionResult& cond);
nlohmann::json to_json(const SamplingPlan& plan);
nlohmann::json to_json(const VerificationReport& rep);
nlohmann::json to_json(const Lemma1Report& rep);
nlohmann::json to_json(const ExitStats& stats);
nlohmann::json to_json(const LyapunovReport& rep);
nlohmann::json to_json(const LyapunovProfile& prof);

void stamp_generated_at(nlohmann::json& doc);

/// Per-point margin table (x1..xn, h, margin and tolerance, couplings when
/// present) with `# key: value` metadata lines. Needs keep_points to have
/// been set on the originating check.
std::string margins_csv(const VerificationReport& rep);

/// Path dump: metadata lines, then header t,x1..xn,h and one row per
/// sample instant. h values that fail to evaluate are written as nan.
std::string path_csv(const SamplePath& path, const Expr& h);

/// Exceedance matrix: rows are starting distances, columns epsilon levels,
/// final column the row's degenerate-gradient flag.
std::string profile_csv(const LyapunovProfile& prof);

/// Fixed-format text summary of previously emitted JSON documents, in
/// input order. Throws std::runtime_error when a document's schema_version
/// does not match kSchemaVersion or its kind is unknown.
std::string render_summary(const std::vector<nlohmann::json>& docs);

}  // namespace szbf
