#include "cranet/cli/report.h"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include <json.hpp>

#include "cranet/errors.h"

namespace cranet::cli {
namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string real(double v) {
  char buf[40];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::vector<std::string> metric_columns(const MetricReport& r) {
  if (r.task == Task::kRating) return {"rmse"};
  std::vector<std::string> cols;
  for (const auto& [k, v] : r.precision) cols.push_back("precision@" + std::to_string(k));
  for (const auto& [k, v] : r.ndcg) cols.push_back("ndcg@" + std::to_string(k));
  return cols;
}

std::vector<double> metric_values(const MetricReport& r) {
  if (r.task == Task::kRating) return {r.rmse.value_or(NAN)};
  std::vector<double> out;
  for (const auto& [k, v] : r.precision) out.push_back(v);
  for (const auto& [k, v] : r.ndcg) out.push_back(v);
  return out;
}

}  // namespace

std::ofstream open_output(const std::filesystem::path& dir, const std::string& name) {
  std::ofstream out(dir / name, std::ios::binary);
  if (!out) throw DataError("cannot write " + (dir / name).string());
  return out;
}

void write_runs_csv(std::ostream& out, const std::vector<ModelRun>& runs) {
  out << "label,mode,decay,alpha,lambda1,lambda2,lambda3,lambda4,orientation,best_epoch,val_rmse";
  if (!runs.empty())
    for (const auto& c : metric_columns(runs.front().test)) out << ',' << c;
  out << '\n';
  for (const auto& r : runs) {
    const HyperParams& h = r.hyper;
    out << r.label << ',' << to_string(r.mode) << ',' << to_string(h.decay) << ',' << real(h.alpha) << ','
        << real(h.lambda1) << ',' << real(h.lambda2) << ',' << real(h.lambda3) << ',' << real(h.lambda4) << ','
        << to_string(h.orientation) << ',' << r.fit.best_epoch << ','
        << (r.fit.best_val_rmse ? real(*r.fit.best_val_rmse) : "");
    for (double v : metric_values(r.test)) out << ',' << real(v);
    out << '\n';
  }
}

void write_runs_jsonl(std::ostream& out, const std::vector<ModelRun>& runs) {
  for (const auto& r : runs) {
    nlohmann::ordered_json j;
    j["label"] = r.label;
    j["mode"] = to_string(r.mode);
    j["decay"] = to_string(r.hyper.decay);
    j["alpha"] = r.hyper.alpha;
    j["orientation"] = to_string(r.hyper.orientation);
    j["best_epoch"] = r.fit.best_epoch;
    j["val_rmse"] = r.fit.best_val_rmse ? nlohmann::ordered_json(*r.fit.best_val_rmse) : nullptr;
    j["test"] = nlohmann::ordered_json::parse(to_json_line(r.test));
    out << j.dump() << '\n';
  }
}

void write_runs_summary(std::ostream& out, const std::string& title, const std::vector<ModelRun>& runs) {
  out << title << '\n';
  for (const auto& r : runs) {
    char head[160];
    std::snprintf(head, sizeof(head), "  %-22s %-11s %-5s alpha=%-6g epoch=%-4zu val=%s", r.label.c_str(),
                  to_string(r.mode), to_string(r.hyper.decay), r.hyper.alpha, r.fit.best_epoch,
                  r.fit.best_val_rmse ? num(*r.fit.best_val_rmse).c_str() : "-");
    out << head;
    const auto cols = metric_columns(r.test);
    const auto vals = metric_values(r.test);
    for (std::size_t i = 0; i < cols.size(); ++i) out << ' ' << cols[i] << '=' << num(vals[i]);
    out << " scored=" << r.test.scored << " dropped=" << r.test.dropped + r.test.dropped_cold_test << '\n';
  }
}

void write_sparsity_csv(std::ostream& out, const std::vector<SparsityRow>& rows) {
  out << "group,vectors,min_count,max_count,label,mode,best_epoch,val_rmse,test_rmse,scored\n";
  for (const auto& s : rows) {
    out << s.group << ',' << s.vectors << ',' << s.min_count << ',' << s.max_count << ',' << s.run.label << ','
        << to_string(s.run.mode) << ',' << s.run.fit.best_epoch << ','
        << (s.run.fit.best_val_rmse ? real(*s.run.fit.best_val_rmse) : "") << ','
        << (s.run.test.rmse ? real(*s.run.test.rmse) : "") << ',' << s.run.test.scored << '\n';
  }
}

void write_grid_csv(std::ostream& out, const GridResult& grid) {
  out << "alpha,lambda,best_epoch,val_rmse\n";
  for (const auto& r : grid.rows)
    out << real(r.alpha) << ',' << real(r.lambda) << ',' << r.best_epoch << ',' << real(r.val_rmse) << '\n';
}

void write_verify_text(std::ostream& out, const std::vector<VerifyEntry>& entries) {
  bool all = true;
  for (const auto& e : entries) {
    out << to_text_line(e.report) << (e.expect_pass ? "" : "  (control: must fail)") << (e.ok() ? "" : "  <-- UNEXPECTED")
        << '\n';
    all = all && e.ok();
  }
  out << "verify " << (all ? "PASS" : "FAIL") << '\n';
}

void write_verify_jsonl(std::ostream& out, const std::vector<VerifyEntry>& entries) {
  for (const auto& e : entries) {
    auto j = nlohmann::ordered_json::parse(to_json_line(e.report));
    j["expect_pass"] = e.expect_pass;
    j["ok"] = e.ok();
    out << j.dump() << '\n';
  }
}

}  // namespace cranet::cli
