#pragma once

#include <string>
#include <vector>

#include "config.hpp"
#include "report.hpp"

namespace negtune {

// High-level run drivers. Every driver writes the fully resolved config next
// to its outputs and never mutates its inputs.

// scaling.json: {beta_prime, gamma_prime, corpus_digest}
void run_calibrate(const RunConfig& cfg);

// checkpoint.ntc + history.jsonl + report.csv + summary.csv; optionally
// ratematch.json for encoder-mode runs with rate matching enabled.
void run_finetune(const RunConfig& cfg);

// report.csv + summary.csv for a checkpoint (or encoder/decoder pair).
void run_evaluate(const RunConfig& cfg);

// probe.csv over the configured attack sweeps.
void run_probe(const RunConfig& cfg);

// rank.csv from grid CSVs.
void run_rank(const std::vector<std::string>& grid_csvs, const std::string& tie_policy,
              const std::string& out_csv);

} // namespace negtune
