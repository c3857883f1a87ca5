#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "cranet/cli/commands.h"

namespace cranet::cli {

// One CSV row per run: label,mode,decay,alpha,lambda1..4,orientation,
// best_epoch,val_rmse, then rmse (rating) or precision@K,ndcg@K (ranking).
void write_runs_csv(std::ostream& out, const std::vector<ModelRun>& runs);

// One JSON object per line: label, mode, decay, alpha, orientation,
// best_epoch, val_rmse and the nested metric report.
void write_runs_jsonl(std::ostream& out, const std::vector<ModelRun>& runs);

// Aligned human-readable table.
void write_runs_summary(std::ostream& out, const std::string& title, const std::vector<ModelRun>& runs);

void write_sparsity_csv(std::ostream& out, const std::vector<SparsityRow>& rows);
void write_grid_csv(std::ostream& out, const GridResult& grid);

// One text line per check, then an overall PASS/FAIL line.
void write_verify_text(std::ostream& out, const std::vector<VerifyEntry>& entries);
void write_verify_jsonl(std::ostream& out, const std::vector<VerifyEntry>& entries);

// Opens `dir / name` for writing; throws DataError when that fails.
std::ofstream open_output(const std::filesystem::path& dir, const std::string& name);

}  // namespace cranet::cli
