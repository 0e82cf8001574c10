#include "recaudit/report.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <fmt/core.h>
#include <openssl/evp.h>

namespace recaudit {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

double parse_double(const std::string& text) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw std::invalid_argument(fmt::format("not a number: '{}'", text));
  }
  return v;
}

}  // namespace

std::string format_number(double value) { return fmt::format("{}", value); }

void write_metrics_csv(std::span<const MetricReport> reports, std::ostream& out) {
  out << "model,sampler,cutoff,recall,mrr\n";
  for (const auto& r : reports) {
    for (std::size_t i = 0; i < r.cutoffs.size(); ++i) {
      out << csv_field(r.model) << ',' << csv_field(r.sampler) << ',' << r.cutoffs[i] << ','
          << format_number(r.recall[i]) << ',' << format_number(r.mrr[i]) << '\n';
    }
  }
}

std::vector<MetricReport> read_metrics_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || split_csv_line(line) != std::vector<std::string>{"model", "sampler", "cutoff", "recall", "mrr"}) {
    throw std::invalid_argument("metrics CSV must start with the header model,sampler,cutoff,recall,mrr");
  }
  std::vector<MetricReport> reports;
  std::map<std::pair<std::string, std::string>, std::size_t> slot;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 5) throw std::invalid_argument(fmt::format("metrics CSV line {}: expected 5 fields", line_no));
    const auto key = std::make_pair(f[0], f[1]);
    auto it = slot.find(key);
    if (it == slot.end()) {
      it = slot.emplace(key, reports.size()).first;
      MetricReport r;
      r.model = f[0];
      r.sampler = f[1];
      reports.push_back(std::move(r));
    }
    auto& r = reports[it->second];
    std::size_t cutoff = 0;
    const auto [ptr, ec] = std::from_chars(f[2].data(), f[2].data() + f[2].size(), cutoff);
    if (ec != std::errc() || ptr != f[2].data() + f[2].size()) {
      throw std::invalid_argument(fmt::format("metrics CSV line {}: bad cutoff '{}'", line_no, f[2]));
    }
    r.cutoffs.push_back(cutoff);
    r.recall.push_back(parse_double(f[3]));
    r.mrr.push_back(parse_double(f[4]));
  }
  return reports;
}

void write_crossings_csv(std::span<const CrossingReport> reports, std::ostream& out) {
  out << "model_a,model_b,metric,sampler,cutoff,relative_difference\n";
  for (const auto& r : reports) {
    for (std::size_t i = 0; i < r.cutoffs.size(); ++i) {
      out << csv_field(r.model_a) << ',' << csv_field(r.model_b) << ',' << r.metric << ',' << csv_field(r.sampler)
          << ',' << r.cutoffs[i] << ',';
      if (r.relative_difference[i]) out << format_number(*r.relative_difference[i]);
      out << '\n';
    }
  }
}

void write_transition_rate_csv(std::span<const DailyTransitionRate> rates, std::ostream& out) {
  out << "day,new_transitions,denominator,rate\n";
  for (const auto& r : rates) {
    out << r.day << ',' << r.new_transitions << ',' << r.denominator << ',' << format_number(r.rate) << '\n';
  }
}

bool DiagnosticsBundle::empty() const {
  return !collisions && transition_rate.empty() && !overlap && !sequentiality && skipped.empty();
}

Json to_json(const DiagnosticsBundle& d) {
  Json j = Json::object();
  if (d.collisions) {
    j["collisions"] = to_json(*d.collisions);
    j["collisions"]["hazard"] = d.collision_hazard;
  }
  if (!d.transition_rate.empty()) {
    Json rows = Json::array();
    for (const auto& r : d.transition_rate) {
      rows.push_back({{"day", r.day}, {"new_transitions", r.new_transitions}, {"denominator", r.denominator}, {"rate", r.rate}});
    }
    j["new_transition_rate"] = std::move(rows);
  }
  if (d.overlap) j["overlap"] = to_json(*d.overlap);
  if (d.sequentiality) j["sequentiality"] = to_json(*d.sequentiality);
  if (!d.skipped.empty()) j["skipped"] = d.skipped;
  return j;
}

Json metrics_json(std::span<const MetricReport> reports, std::span<const CrossingReport> crossings) {
  Json j = Json::object();
  Json list = Json::array();
  for (const auto& r : reports) list.push_back(to_json(r));
  j["metrics"] = std::move(list);
  if (!crossings.empty()) {
    Json c = Json::array();
    for (const auto& r : crossings) c.push_back(to_json(r));
    j["crossings"] = std::move(c);
  }
  return j;
}

void write_text_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path));
  out << contents;
  out.close();
  if (!out) throw std::runtime_error(fmt::format("failed writing '{}'", path));
}

void write_json_file(const std::string& path, const Json& value) { write_text_file(path, value.dump(2) + "\n"); }

std::vector<EmittedFile> emit_reports(const ReportSet& reports, const std::string& dir, bool json, bool csv) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error(fmt::format("cannot create output directory '{}': {}", dir, ec.message()));
  std::vector<EmittedFile> files;
  const auto put = [&](const std::string& stage, const std::string& name, const std::string& contents) {
    write_text_file((std::filesystem::path(dir) / name).string(), contents);
    files.push_back({stage, name});
  };
  const auto csv_text = [](auto&& writer) {
    std::ostringstream s;
    writer(s);
    return s.str();
  };

  if (json && reports.ingest) put("ingest", "ingest.json", reports.ingest->dump(2) + "\n");
  if (json && reports.preprocess) put("preprocess", "preprocess.json", reports.preprocess->dump(2) + "\n");
  if (json && reports.split) put("split", "split.json", reports.split->dump(2) + "\n");
  if (!reports.diagnostics.empty()) {
    if (json) put("diagnose", "diagnostics.json", to_json(reports.diagnostics).dump(2) + "\n");
    if (csv && !reports.diagnostics.transition_rate.empty()) {
      put("diagnose", "transition_rate.csv",
          csv_text([&](std::ostream& s) { write_transition_rate_csv(reports.diagnostics.transition_rate, s); }));
    }
  }
  if (!reports.metrics.empty()) {
    if (json) put("evaluate", "metrics.json", metrics_json(reports.metrics, reports.crossings).dump(2) + "\n");
    if (csv) put("evaluate", "metrics.csv", csv_text([&](std::ostream& s) { write_metrics_csv(reports.metrics, s); }));
    if (csv && !reports.crossings.empty()) {
      put("evaluate", "crossings.csv", csv_text([&](std::ostream& s) { write_crossings_csv(reports.crossings, s); }));
    }
  }
  return files;
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(fmt::format("cannot read '{}'", path));
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

}  // namespace recaudit
