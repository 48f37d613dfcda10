// Copyright 2026 The Quarry Authors.
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
#include <map>
#include <set>

#include "quarry/evalkit.h"
#include "quarry/io.h"

namespace quarry {
namespace {

std::string fmt_num(double v, int precision = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v) {
  return v ? fmt_num(*v) : std::string("-");
}

const std::vector<std::string> kMetrics = {"em", "f1", "a_em", "a_f1", "accuracy"};

std::optional<double> metric_of(const MetricReport& r, const std::string& metric) {
  if (metric == "em") return r.em;
  if (metric == "f1") return r.f1;
  if (metric == "a_em") return r.a_em;
  if (metric == "a_f1") return r.a_f1;
  if (metric == "accuracy") return r.accuracy;
  throw Error("unknown metric \"" + metric + "\"");
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

Json item_json(const ItemScore& s) {
  Json j = {{"item_id", s.item_id}, {"kind", item_kind_name(s.kind)},
            {"em", s.em},           {"f1", s.f1},
            {"failed", s.failed}};
  if (s.correct) j["correct"] = *s.correct;
  return j;
}

Json items_json(const MetricReport& r) {
  Json items = Json::array();
  for (const auto& s : r.items) items.push_back(item_json(s));
  return items;
}

}  // namespace

Json to_json(const MetricReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
  return {{"pipeline", r.pipeline},
          {"k_or_m", r.k_or_m},
          {"em", opt(r.em)},
          {"f1", opt(r.f1)},
          {"a_em", opt(r.a_em)},
          {"a_f1", opt(r.a_f1)},
          {"accuracy", opt(r.accuracy)},
          {"deep_count", r.deep_count},
          {"multi_count", r.multi_count},
          {"matching_count", r.matching_count},
          {"failed_count", r.failed_count},
          {"fallback_count", r.fallback_count},
          {"mean_context_tokens", r.mean_context_tokens},
          {"items", items_json(r)}};
}

MetricReport metric_report_from_json(const Json& j) {
  auto opt = [&](const char* key) -> std::optional<double> {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return j[key].get<double>();
  };
  MetricReport r;
  r.pipeline = j.at("pipeline").get<std::string>();
  r.k_or_m = j.at("k_or_m").get<int>();
  r.em = opt("em");
  r.f1 = opt("f1");
  r.a_em = opt("a_em");
  r.a_f1 = opt("a_f1");
  r.accuracy = opt("accuracy");
  r.deep_count = j.value("deep_count", std::size_t{0});
  r.multi_count = j.value("multi_count", std::size_t{0});
  r.matching_count = j.value("matching_count", std::size_t{0});
  r.failed_count = j.value("failed_count", std::size_t{0});
  r.fallback_count = j.value("fallback_count", std::size_t{0});
  r.mean_context_tokens = j.value("mean_context_tokens", 0.0);
  for (const auto& it : j.value("items", Json::array())) {
    ItemScore s;
    s.item_id = it.at("item_id").get<std::string>();
    s.kind = parse_item_kind(it.at("kind").get<std::string>());
    s.em = it.value("em", 0.0);
    s.f1 = it.value("f1", 0.0);
    if (it.contains("correct")) s.correct = it["correct"].get<bool>();
    s.failed = it.value("failed", false);
    r.items.push_back(std::move(s));
  }
  return r;
}

std::string report_table(const std::vector<MetricReport>& reports) {
  std::string out =
      "pipeline\tk_or_m\tdeep\tmulti\tmatching\tem\tf1\ta_em\ta_f1\taccuracy\t"
      "failed\tfallback\tmean_context_tokens\n";
  for (const auto& r : reports) {
    out += r.pipeline + "\t" + std::to_string(r.k_or_m) + "\t" +
           std::to_string(r.deep_count) + "\t" + std::to_string(r.multi_count) + "\t" +
           std::to_string(r.matching_count) + "\t" + fmt_opt(r.em) + "\t" +
           fmt_opt(r.f1) + "\t" + fmt_opt(r.a_em) + "\t" + fmt_opt(r.a_f1) + "\t" +
           fmt_opt(r.accuracy) + "\t" + std::to_string(r.failed_count) + "\t" +
           std::to_string(r.fallback_count) + "\t" + fmt_num(r.mean_context_tokens, 2) +
           "\n";
  }
  return out;
}

std::string item_scores_jsonl(const std::vector<MetricReport>& reports) {
  std::string out;
  for (const auto& r : reports) {
    for (const auto& s : r.items) {
      Json j = {{"pipeline", r.pipeline}, {"k_or_m", r.k_or_m}};
      j.update(item_json(s));
      out += j.dump() + "\n";
    }
  }
  return out;
}

std::string sweep_plot_svg(const std::vector<MetricReport>& reports,
                           const std::string& metric) {
  constexpr double kW = 640, kH = 400, kLeft = 60, kRight = 150, kTop = 40, kBottom = 50;
  std::map<std::string, std::vector<std::pair<int, double>>> series;
  std::set<int> xs;
  for (const auto& r : reports) {
    if (auto v = metric_of(r, metric)) {
      series[r.pipeline].emplace_back(r.k_or_m, *v);
      xs.insert(r.k_or_m);
    }
  }
  // Categorical x axis: sweep values are sparse (1, 3, 10, 50).
  std::map<int, double> xpos;
  const double plot_w = kW - kLeft - kRight;
  const double plot_h = kH - kTop - kBottom;
  std::size_t idx = 0;
  for (int x : xs) {
    xpos[x] = kLeft + (xs.size() == 1 ? plot_w / 2
                                      : plot_w * static_cast<double>(idx) /
                                            static_cast<double>(xs.size() - 1));
    ++idx;
  }
  auto ypos = [&](double v) { return kTop + plot_h * (1.0 - v); };
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b"};
  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
                    fmt_num(kW, 0) + "\" height=\"" + fmt_num(kH, 0) +
                    "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + fmt_num(kW / 2, 1) + "\" y=\"20\" text-anchor=\"middle\">" +
         xml_escape(metric) + " vs k/m</text>\n";
  svg += "<line x1=\"" + fmt_num(kLeft, 1) + "\" y1=\"" + fmt_num(kTop + plot_h, 1) +
         "\" x2=\"" + fmt_num(kLeft + plot_w, 1) + "\" y2=\"" +
         fmt_num(kTop + plot_h, 1) + "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + fmt_num(kLeft, 1) + "\" y1=\"" + fmt_num(kTop, 1) +
         "\" x2=\"" + fmt_num(kLeft, 1) + "\" y2=\"" + fmt_num(kTop + plot_h, 1) +
         "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = t / 4.0;
    svg += "<text x=\"" + fmt_num(kLeft - 8, 1) + "\" y=\"" + fmt_num(ypos(v) + 4, 1) +
           "\" text-anchor=\"end\">" + fmt_num(v, 2) + "</text>\n";
  }
  for (const auto& [x, px] : xpos) {
    svg += "<text x=\"" + fmt_num(px, 1) + "\" y=\"" + fmt_num(kTop + plot_h + 18, 1) +
           "\" text-anchor=\"middle\">" + std::to_string(x) + "</text>\n";
  }
  std::size_t color = 0;
  for (auto& [name, points] : series) {
    std::sort(points.begin(), points.end());
    const char* c = kColors[color % (sizeof(kColors) / sizeof(kColors[0]))];
    std::string pts;
    for (const auto& [x, v] : points) {
      if (!pts.empty()) pts += ' ';
      pts += fmt_num(xpos[x], 1) + "," + fmt_num(ypos(v), 1);
      svg += "<circle cx=\"" + fmt_num(xpos[x], 1) + "\" cy=\"" + fmt_num(ypos(v), 1) +
             "\" r=\"3\" fill=\"" + c + "\"/>\n";
    }
    svg += "<polyline fill=\"none\" stroke=\"" + std::string(c) + "\" points=\"" + pts +
           "\"/>\n";
    const double ly = kTop + 16.0 * static_cast<double>(color);
    svg += "<text x=\"" + fmt_num(kW - kRight + 12, 1) + "\" y=\"" + fmt_num(ly + 4, 1) +
           "\" fill=\"" + c + "\">" + xml_escape(name) + "</text>\n";
    ++color;
  }
  svg += "</svg>\n";
  return svg;
}

std::vector<std::filesystem::path> sweep_report(const std::vector<MetricReport>& reports,
                                                const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written = {dir / "report.tsv", dir / "scores.jsonl"};
  write_file_atomic(written[0], report_table(reports));
  write_file_atomic(written[1], item_scores_jsonl(reports));
  for (const auto& metric : kMetrics) {
    const bool any = std::any_of(reports.begin(), reports.end(), [&](const auto& r) {
      return metric_of(r, metric).has_value();
    });
    if (!any) continue;
    written.push_back(dir / (metric + ".svg"));
    write_file_atomic(written.back(), sweep_plot_svg(reports, metric));
  }
  return written;
}

}  // namespace quarry
