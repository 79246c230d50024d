// Copyright 2026 The selfmix-lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "selfmix/error.hpp"
#include "selfmix/harness.hpp"

namespace selfmix {

namespace {

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", x);
  return buf;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << content;
}

}  // namespace

SelectionMetrics selection_metrics(const DataSplit& split, const CorruptionManifest& manifest) {
  if (manifest.num_examples != split.posteriors.size()) {
    throw ArgumentError("selection_metrics: manifest describes " + std::to_string(manifest.num_examples) +
                        " examples, split " + std::to_string(split.posteriors.size()));
  }
  for (const Flip& f : manifest.flips) {
    if (f.id >= manifest.num_examples) throw ArgumentError("selection_metrics: flipped id out of range");
  }
  return selection_metrics(split, manifest.noisy_mask());
}

std::vector<HistogramBin> loss_histogram(const std::vector<double>& losses,
                                         const std::vector<bool>& noisy, std::size_t bins) {
  if (losses.empty()) throw ArgumentError("loss_histogram: no losses");
  if (bins == 0) throw ArgumentError("loss_histogram: bins must be >= 1");
  if (noisy.size() != losses.size()) throw ArgumentError("loss_histogram: mask length mismatch");
  const auto [lo_it, hi_it] = std::minmax_element(losses.begin(), losses.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  const double width = (hi - lo) / static_cast<double>(bins);
  std::vector<HistogramBin> hist(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    hist[b].left = lo + width * static_cast<double>(b);
    hist[b].right = b + 1 == bins ? hi : lo + width * static_cast<double>(b + 1);
  }
  for (std::size_t i = 0; i < losses.size(); ++i) {
    std::size_t b = 0;
    if (width > 0.0) {
      b = static_cast<std::size_t>((losses[i] - lo) / width);
      b = std::min(b, bins - 1);  // max lands in the right-closed last bin
    }
    ++(noisy[i] ? hist[b].noisy : hist[b].clean);
  }
  return hist;
}

std::string format_histogram(const std::vector<HistogramBin>& hist,
                             const std::vector<std::string>& comments) {
  std::string out;
  for (const auto& c : comments) out += "# " + c + "\n";
  out += "bin_left,bin_right,clean_count,noisy_count\n";
  for (const auto& b : hist) {
    out += num(b.left) + "," + num(b.right) + "," + std::to_string(b.clean) + "," +
           std::to_string(b.noisy) + "\n";
  }
  return out;
}

void emit_loss_histogram(const std::vector<double>& losses, const CorruptionManifest& manifest,
                         std::size_t bins, const std::string& path,
                         const std::vector<std::string>& comments) {
  if (manifest.num_examples != losses.size()) {
    throw ArgumentError("emit_loss_histogram: manifest size does not match losses");
  }
  write_text(path, format_histogram(loss_histogram(losses, manifest.noisy_mask(), bins), comments));
}

nlohmann::ordered_json report_to_json(const TrainReport& report,
                                      const std::vector<std::pair<std::string, std::string>>& echo) {
  nlohmann::ordered_json j;
  j["arm"] = report.arm;
  j["epochs"] = report.epochs.size();
  j["best_acc"] = report.best_acc;
  j["last_acc"] = report.last_acc;
  auto per_epoch = nlohmann::ordered_json::array();
  for (const auto& e : report.epochs) {
    nlohmann::ordered_json row;
    row["epoch"] = e.epoch;
    row["phase"] = e.phase;
    row["test_acc"] = e.test_acc;
    if (e.selection) {
      row["sel_precision"] = e.selection->precision;
      row["sel_recall"] = e.selection->recall;
      row["sel_f1"] = e.selection->f1;
    } else {
      row["sel_precision"] = nullptr;
      row["sel_recall"] = nullptr;
      row["sel_f1"] = nullptr;
    }
    row["l_mix"] = e.l_mix;
    row["l_p"] = e.l_p;
    row["l_r"] = e.l_r;
    row["labeled_count"] = e.labeled_count;
    row["step_acc"] = e.step_acc;
    per_epoch.push_back(std::move(row));
  }
  j["per_epoch"] = std::move(per_epoch);
  j["warnings"] = report.warnings;
  nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
  for (const auto& [k, v] : echo) cfg[k] = v;
  j["config"] = std::move(cfg);
  return j;
}

std::string report_to_csv(const TrainReport& report,
                          const std::vector<std::pair<std::string, std::string>>& echo) {
  std::string out;
  for (const auto& [k, v] : echo) out += "# " + k + " = " + v + "\n";
  out += "epoch,phase,test_acc,sel_precision,sel_recall,sel_f1,l_mix,l_p,l_r,labeled_count,step_acc\n";
  for (const auto& e : report.epochs) {
    std::string steps;
    for (std::size_t k = 0; k < e.step_acc.size(); ++k) steps += (k ? ";" : "") + num(e.step_acc[k]);
    out += std::to_string(e.epoch) + "," + e.phase + "," + num(e.test_acc) + ",";
    if (e.selection) {
      out += num(e.selection->precision) + "," + num(e.selection->recall) + "," + num(e.selection->f1) + ",";
    } else {
      out += ",,,";
    }
    out += num(e.l_mix) + "," + num(e.l_p) + "," + num(e.l_r) + "," + std::to_string(e.labeled_count) +
           "," + steps + "\n";
  }
  return out;
}

void write_report(const TrainReport& report, const ExperimentConfig& config, const std::string& stem) {
  const auto echo = config.echo();
  write_text(stem + ".json", report_to_json(report, echo).dump(2) + "\n");
  write_text(stem + ".csv", report_to_csv(report, echo));
}

std::string render_summary(const nlohmann::ordered_json& summary) {
  std::ostringstream out;
  char line[160];
  out << "status: " << summary.value("status", std::string("unknown")) << "\n";
  if (summary.contains("failed_stage")) {
    out << "failed stage: " << summary["failed_stage"].get<std::string>() << "\n";
    out << "error: " << summary.value("error", std::string()) << "\n";
  }
  if (summary.contains("noise")) {
    const auto& n = summary["noise"];
    out << "noise: " << n.value("type", std::string("none")) << " ratio "
        << num(n.value("ratio", 0.0)) << " (" << n.value("flipped", 0) << " flipped)\n";
  }
  std::snprintf(line, sizeof(line), "%-10s %10s %10s %10s %12s\n", "arm", "best_acc", "last_acc",
                "best-last", "final_sel_f1");
  out << line;
  for (const char* arm : {"baseline", "selfmix"}) {
    if (!summary.contains(arm)) continue;
    const auto& a = summary[arm];
    const double best = a.value("best_acc", 0.0);
    const double last = a.value("last_acc", 0.0);
    std::string f1 = "-";
    if (a.contains("final_sel_f1") && a["final_sel_f1"].is_number()) f1 = num(a["final_sel_f1"].get<double>());
    std::snprintf(line, sizeof(line), "%-10s %10.4f %10.4f %10.4f %12s\n", arm, best, last, best - last,
                  f1.c_str());
    out << line;
  }
  return out.str();
}

}  // namespace selfmix
