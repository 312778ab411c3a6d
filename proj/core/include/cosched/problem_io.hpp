#pragma once

#include <string>
#include <vector>

#include "cosched/synthesis.hpp"

namespace cosched::io {

/// Parses a problem file (strict schema; unknown keys are rejected with
/// path-precise messages). `warnings` collects non-fatal normalization notes.
SynthesisProblem load_problem(const std::string& path, std::vector<std::string>* warnings);
SynthesisProblem parse_problem(const std::string& json_text, std::vector<std::string>* warnings);

HPolytope parse_polytope_fragment(const std::string& json_text);

void write_result(const std::string& path, const SynthesisProblem& p, const SynthesisResult& r,
                  const CertificateReport& report, std::uint64_t seed);

/// Reads back a result written by write_result (schedule and gains; the
/// certificate blocks when present).
SynthesisResult load_result(const std::string& path, const SynthesisProblem& p);

}  // namespace cosched::io
