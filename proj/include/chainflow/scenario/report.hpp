#pragma once

#include <cctype>
#include <charconv>
#include <filesystem>
#include <map>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "chainflow/scenario/runner.hpp"

namespace chainflow::scenario {

enum class ReportFormat { Csv, Text };

inline ReportFormat parse_report_format(std::string_view s) {
  if (s == "csv") return ReportFormat::Csv;
  if (s == "text") return ReportFormat::Text;
  throw ScenarioError("unknown report format '" + std::string(s) + "'");
}

inline const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols = {"scenario", "method", "C_f", "C_p", "E_a", "F_c", "C_e", "status"};
  return cols;
}

// Shortest text that parses back to the same double.
inline std::string format_number(double v) {
  if (v == 0.0) v = 0.0;  // no "-0"
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

namespace detail {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw ScenarioError("unterminated quote in CSV line");
  out.push_back(std::move(cur));
  return out;
}

template <class T>
T parse_field(const std::string& s, const char* column) {
  T v{};
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size())
    throw ScenarioError(std::string("bad value '") + s + "' in column " + column);
  return v;
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ScenarioError("cannot write '" + path + "'");
  out << text;
  if (!out) throw ScenarioError("cannot write '" + path + "'");
}

}  // namespace detail

inline std::string to_csv(const std::vector<MetricsRow>& rows) {
  std::string out;
  for (std::size_t i = 0; i < csv_columns().size(); ++i) out += (i ? "," : "") + csv_columns()[i];
  out += '\n';
  for (const auto& r : rows) {
    out += detail::csv_field(r.scenario) + ',' + detail::csv_field(r.method) + ',' + format_number(r.C_f) + ',' +
           format_number(r.C_p) + ',' + std::to_string(r.E_a) + ',' + std::to_string(r.F_c) + ',' +
           std::to_string(r.C_e) + ',' + detail::csv_field(r.status) + '\n';
  }
  return out;
}

inline std::vector<MetricsRow> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || detail::split_csv_line(line) != csv_columns())
    throw ScenarioError("CSV header does not match the metrics columns");
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != csv_columns().size()) throw ScenarioError("CSV row has the wrong number of fields");
    MetricsRow r;
    r.scenario = f[0];
    r.method = f[1];
    r.C_f = detail::parse_field<double>(f[2], "C_f");
    r.C_p = detail::parse_field<double>(f[3], "C_p");
    r.E_a = detail::parse_field<std::size_t>(f[4], "E_a");
    r.F_c = detail::parse_field<std::size_t>(f[5], "F_c");
    r.C_e = detail::parse_field<std::size_t>(f[6], "C_e");
    r.status = f[7];
    rows.push_back(std::move(r));
  }
  return rows;
}

// Aligned table with signed cost changes, one row per method run.
inline std::string to_text(const std::vector<MetricsRow>& rows) {
  std::vector<std::vector<std::string>> cells = {{"Scenario", "Method", "C_f", "C_p", "E_a", "F_c", "C_e", "Status"}};
  auto money = [](double v) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(2) << std::showpos << (v == 0.0 ? 0.0 : v);
    return s.str();
  };
  for (const auto& r : rows)
    cells.push_back({r.scenario, r.method, money(r.C_f), money(r.C_p), std::to_string(r.E_a), std::to_string(r.F_c),
                     std::to_string(r.C_e), r.status});
  std::vector<std::size_t> width(cells[0].size(), 0);
  for (const auto& row : cells)
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  std::string out;
  auto emit = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      // Text columns left-aligned, numbers right-aligned.
      const bool left = i < 2 || i == row.size() - 1;
      const std::string pad(width[i] - row[i].size(), ' ');
      out += left ? row[i] + pad : pad + row[i];
      if (i + 1 < row.size()) out += "  ";
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    out += '\n';
  };
  emit(cells[0]);
  std::size_t total = 0;
  for (auto w : width) total += w + 2;
  out += std::string(total - 2, '-') + '\n';
  for (std::size_t i = 1; i < cells.size(); ++i) emit(cells[i]);
  return out;
}

inline std::string render_report(const std::vector<MetricsRow>& rows, ReportFormat format) {
  return format == ReportFormat::Csv ? to_csv(rows) : to_text(rows);
}

inline void export_report(const RunReport& report, ReportFormat format, const std::string& path) {
  detail::write_file(path, render_report(report.rows(), format));
}

// ---------------------------------------------------------------------------
// Flow diff graph

inline std::string_view diff_annotation(EdgeStatus s) {
  switch (s) {
    case EdgeStatus::Unchanged: return "unchanged";
    case EdgeStatus::Changed: return "changed";
    case EdgeStatus::Added: return "added";
    case EdgeStatus::Removed: return "removed";
    case EdgeStatus::Unused: return "unused";
  }
  return "?";
}

namespace detail {

inline std::string dot_id(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

inline std::string flow_label(const SupplyNetwork& net, const EdgeDiff& d) {
  std::string out;
  for (std::size_t k = 0; k < net.num_products(); ++k) {
    const double a = d.before[k], b = d.after[k];
    if (a == 0.0 && b == 0.0) continue;
    if (!out.empty()) out += "; ";
    out += net.products[k].id + " ";
    out += std::abs(a - b) <= kTolerance ? format_number(b) : format_number(a) + " -> " + format_number(b);
  }
  return out;
}

}  // namespace detail

// DOT graph of the edges used before or after the recovery, each tagged
// with comment="unchanged|changed|added|removed" and a matching colour.
inline std::string flow_diff_dot(const RunReport& report, Method method) {
  const auto& run = report.run(method);
  const auto& net = report.network;
  std::ostringstream out;
  out << "digraph flow_diff {\n";
  out << "  graph [rankdir=LR, label=" << detail::dot_id(report.scenario + " (" + std::string(to_string(method)) + ")")
      << "];\n";
  out << "  node [shape=box, fontname=\"Helvetica\"];\n";
  out << "  edge [fontname=\"Helvetica\", fontsize=10];\n";
  for (auto kind : {EntityKind::TierSupplier, EntityKind::OEM, EntityKind::Distributor, EntityKind::Customer}) {
    out << "  { rank=same;";
    for (const auto& v : net.vertices)
      if (v.kind == kind) out << ' ' << detail::dot_id(v.id) << ';';
    out << " }\n";
  }
  for (const auto& v : net.vertices) {
    out << "  " << detail::dot_id(v.id);
    if (!v.available) out << " [style=dashed, color=\"gray60\", fontcolor=\"gray60\"]";
    out << ";\n";
  }
  for (const auto& d : run.diff) {
    if (d.status == EdgeStatus::Unused) continue;
    const auto& ed = net.edges[d.edge];
    const char* color = "gray40";
    const char* style = "solid";
    switch (d.status) {
      case EdgeStatus::Changed: color = "blue"; break;
      case EdgeStatus::Added: color = "forestgreen"; style = "bold"; break;
      case EdgeStatus::Removed: color = "red"; style = "dashed"; break;
      default: break;
    }
    out << "  " << detail::dot_id(net.vertices[ed.from].id) << " -> " << detail::dot_id(net.vertices[ed.to].id)
        << " [comment=\"" << diff_annotation(d.status) << "\", color=\"" << color << "\", style=" << style
        << ", label=" << detail::dot_id(detail::flow_label(net, d)) << "];\n";
  }
  out << "}\n";
  return out.str();
}

inline void export_flow_diff(const RunReport& report, Method method, const std::string& path) {
  detail::write_file(path, flow_diff_dot(report, method));
}

// Number of edges in a DOT diff carrying the given annotation.
inline std::size_t count_annotated(const std::string& dot, std::string_view annotation) {
  const std::string needle = "comment=\"" + std::string(annotation) + "\"";
  std::size_t n = 0;
  for (auto pos = dot.find(needle); pos != std::string::npos; pos = dot.find(needle, pos + 1)) ++n;
  return n;
}

// ---------------------------------------------------------------------------
// Comparison bundle

inline std::string file_stem(const std::string& scenario) {
  std::string out;
  for (char c : scenario) out += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
  return out;
}

// Every artifact of a set of runs, keyed by file name: the metrics table in
// both formats, one flow diff per method run and the distributed transcripts.
inline std::map<std::string, std::string> comparison_files(const std::vector<RunReport>& reports) {
  std::map<std::string, std::string> files;
  std::vector<MetricsRow> rows;
  for (const auto& r : reports) {
    for (const auto& run : r.runs) {
      rows.push_back(run.metrics);
      const auto stem = file_stem(r.scenario) + "_" + std::string(to_string(run.method));
      files[stem + ".dot"] = flow_diff_dot(r, run.method);
      if (run.method == Method::Distributed) files[stem + ".jsonl"] = protocol::to_json_lines(r.network, run.log);
    }
  }
  files["metrics.csv"] = to_csv(rows);
  files["metrics.txt"] = to_text(rows);
  return files;
}

inline void write_files(const std::string& dir, const std::map<std::string, std::string>& files) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ScenarioError("cannot create '" + dir + "': " + ec.message());
  for (const auto& [name, text] : files) detail::write_file((std::filesystem::path(dir) / name).string(), text);
}

}  // namespace chainflow::scenario
