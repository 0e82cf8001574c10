#include "recaudit/event_store.hpp"

#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <fstream>
#include <numeric>
#include <sstream>

#include <fmt/core.h>

namespace recaudit {

namespace {

constexpr std::size_t kMaxRejectSamples = 10;

struct Record {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

// RFC 4180-style splitter: quoted fields may contain the delimiter, doubled
// quotes and newlines. Blank lines are skipped.
class RecordReader {
 public:
  RecordReader(std::string_view text, char delimiter) : text_(text), delimiter_(delimiter) {}

  bool next(Record& record) {
    record.fields.clear();
    while (pos_ < text_.size() && (text_[pos_] == '\n' || text_[pos_] == '\r')) {
      if (text_[pos_] == '\n') ++line_;
      ++pos_;
    }
    if (pos_ >= text_.size()) return false;
    record.line = line_;
    std::string field;
    bool quoted = false;
    while (pos_ < text_.size()) {
      const char c = text_[pos_++];
      if (quoted) {
        if (c == '"') {
          if (pos_ < text_.size() && text_[pos_] == '"') {
            field.push_back('"');
            ++pos_;
          } else {
            quoted = false;
          }
        } else {
          if (c == '\n') ++line_;
          field.push_back(c);
        }
      } else if (c == '"' && field.empty()) {
        quoted = true;
      } else if (c == delimiter_) {
        record.fields.push_back(std::move(field));
        field.clear();
      } else if (c == '\n') {
        ++line_;
        break;
      } else if (c != '\r') {
        field.push_back(c);
      }
    }
    record.fields.push_back(std::move(field));
    return true;
  }

 private:
  std::string_view text_;
  char delimiter_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
};

std::string read_stream(std::istream& in) {
  if (!in) throw DataError("unreadable source");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw DataError("unreadable source");
  return std::move(buffer).str();
}

std::string read_gzip(const std::string& path) {
  gzFile file = gzopen(path.c_str(), "rb");
  if (file == nullptr) throw DataError(fmt::format("cannot open '{}'", path));
  std::string out;
  char buf[1 << 16];
  int n;
  while ((n = gzread(file, buf, sizeof(buf))) > 0) out.append(buf, static_cast<std::size_t>(n));
  const bool failed = n < 0;
  gzclose(file);
  if (failed) throw DataError(fmt::format("corrupt gzip stream in '{}'", path));
  return out;
}

bool needs_quoting(std::string_view s) {
  return s.find_first_of("\t\n\r\"") != std::string_view::npos ||
         (!s.empty() && s.front() == '"');
}

void write_field(std::ostream& out, std::string_view s) {
  if (!needs_quoting(s)) {
    out << s;
    return;
  }
  out << '"';
  for (char c : s) {
    if (c == '"') out << '"';
    out << c;
  }
  out << '"';
}

template <typename Int>
std::optional<Int> parse_int(std::string_view s) {
  Int value{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

}  // namespace

const char* to_string(TimestampResolution r) {
  return r == TimestampResolution::kDays ? "days" : "seconds";
}

ItemIndex::ItemIndex(std::vector<std::string> ids) {
  for (auto& id : ids) {
    if (find(id)) throw DataError(fmt::format("duplicate item id '{}'", id));
    intern(id);
  }
}

ItemId ItemIndex::intern(std::string_view id) {
  auto it = forward_.find(std::string(id));
  if (it != forward_.end()) return it->second;
  const auto index = static_cast<ItemId>(reverse_.size());
  reverse_.emplace_back(id);
  forward_.emplace(reverse_.back(), index);
  return index;
}

std::optional<ItemId> ItemIndex::find(std::string_view id) const {
  auto it = forward_.find(std::string(id));
  if (it == forward_.end()) return std::nullopt;
  return it->second;
}

std::size_t EventLog::event_count() const {
  std::size_t n = 0;
  for (const auto& g : groups) n += g.events.size();
  return n;
}

std::optional<Timestamp> parse_timestamp(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  if (auto v = parse_int<Timestamp>(text)) return v;
  // YYYY-MM-DD[(T| )HH:MM:SS[Z]]
  if (text.size() < 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  auto y = parse_int<int>(text.substr(0, 4));
  auto m = parse_int<unsigned>(text.substr(5, 2));
  auto d = parse_int<unsigned>(text.substr(8, 2));
  if (!y || !m || !d) return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{*y}, std::chrono::month{*m},
                                        std::chrono::day{*d}};
  if (!ymd.ok()) return std::nullopt;
  Timestamp seconds = std::chrono::sys_days{ymd}.time_since_epoch().count() * kSecondsPerDay;
  std::string_view rest = text.substr(10);
  if (rest.empty()) return seconds;
  if (rest.front() != 'T' && rest.front() != ' ') return std::nullopt;
  rest.remove_prefix(1);
  if (!rest.empty() && rest.back() == 'Z') rest.remove_suffix(1);
  if (rest.size() != 8 || rest[2] != ':' || rest[5] != ':') return std::nullopt;
  auto hh = parse_int<int>(rest.substr(0, 2));
  auto mm = parse_int<int>(rest.substr(3, 2));
  auto ss = parse_int<int>(rest.substr(6, 2));
  if (!hh || !mm || !ss || *hh > 23 || *mm > 59 || *ss > 60) return std::nullopt;
  return seconds + *hh * 3600 + *mm * 60 + *ss;
}

EventLog build_event_log(std::vector<RawEvent> events, bool has_event_type) {
  std::vector<std::size_t> order(events.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ea = events[a];
    const auto& eb = events[b];
    if (ea.entity != eb.entity) return ea.entity < eb.entity;
    return ea.timestamp < eb.timestamp;
  });
  EventLog log;
  log.has_event_type = has_event_type;
  log.rows_read = events.size();
  for (std::size_t idx : order) {
    RawEvent& e = events[idx];
    if (log.groups.empty() || log.groups.back().entity != e.entity) {
      log.groups.push_back(EntityGroup{e.entity, {}});
    }
    log.groups.back().events.push_back(std::move(e));
  }
  if (!log.empty()) log.resolution = detect_timestamp_resolution(log);
  return log;
}

EventLog ingest_csv(std::istream& source, const IngestOptions& options) {
  const std::string text = read_stream(source);
  char delimiter = ',';
  switch (options.delimiter) {
    case Delimiter::kComma: delimiter = ','; break;
    case Delimiter::kTab: delimiter = '\t'; break;
    case Delimiter::kAuto: {
      const auto header_end = text.find('\n');
      const std::string_view header = std::string_view(text).substr(0, header_end);
      delimiter = header.find('\t') != std::string_view::npos ? '\t' : ',';
      break;
    }
  }
  RecordReader reader(text, delimiter);
  Record header;
  if (!reader.next(header)) throw DataError("input has no header row");

  auto column = [&](const std::string& name) -> std::size_t {
    for (std::size_t i = 0; i < header.fields.size(); ++i) {
      if (trim(header.fields[i]) == name) return i;
    }
    throw DataError(fmt::format("missing mapped column '{}'", name));
  };
  const std::size_t entity_col = column(options.columns.entity);
  const std::size_t item_col = column(options.columns.item);
  const std::size_t time_col = column(options.columns.time);
  std::optional<std::size_t> type_col;
  if (options.columns.type) type_col = column(*options.columns.type);
  std::size_t needed = std::max({entity_col, item_col, time_col});
  if (type_col) needed = std::max(needed, *type_col);

  std::vector<RawEvent> events;
  std::vector<std::string> offenders;
  std::size_t rows = 0;
  std::size_t rejected = 0;
  Record record;
  auto reject = [&](const Record& r, std::string_view why) {
    ++rejected;
    if (offenders.size() < kMaxRejectSamples) offenders.push_back(fmt::format("line {}: {}", r.line, why));
  };
  while (reader.next(record)) {
    ++rows;
    if (record.fields.size() <= needed) {
      reject(record, fmt::format("expected at least {} fields, got {}", needed + 1, record.fields.size()));
      continue;
    }
    RawEvent e;
    e.entity = std::string(trim(record.fields[entity_col]));
    e.item = std::string(trim(record.fields[item_col]));
    if (e.entity.empty()) {
      reject(record, "empty entity id");
      continue;
    }
    if (e.item.empty()) {
      reject(record, "empty item id");
      continue;
    }
    auto ts = parse_timestamp(record.fields[time_col]);
    if (!ts) {
      reject(record, fmt::format("unparseable timestamp '{}'", record.fields[time_col]));
      continue;
    }
    if (*ts < 0) {
      reject(record, fmt::format("negative timestamp {}", *ts));
      continue;
    }
    e.timestamp = *ts;
    if (type_col) e.type = std::string(trim(record.fields[*type_col]));
    events.push_back(std::move(e));
  }

  if (rows > 0 && static_cast<double>(rejected) > options.max_reject_fraction * static_cast<double>(rows)) {
    std::string msg = fmt::format("{} of {} rows malformed (limit {:.4g}%):", rejected, rows,
                                  options.max_reject_fraction * 100.0);
    for (const auto& o : offenders) msg += "\n  " + o;
    throw DataError(msg);
  }

  EventLog log = build_event_log(std::move(events), type_col.has_value());
  log.rows_read = rows;
  log.rows_rejected = rejected;
  log.rejected_samples = std::move(offenders);
  return log;
}

EventLog ingest_file(const std::string& path, const IngestOptions& options) {
  if (path.size() > 3 && path.compare(path.size() - 3, 3, ".gz") == 0) {
    std::istringstream in(read_gzip(path));
    return ingest_csv(in, options);
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open '{}'", path));
  return ingest_csv(in, options);
}

TimestampResolution detect_timestamp_resolution(const EventLog& log) {
  if (log.empty()) throw DataError("cannot detect timestamp resolution of an empty log");
  for (const auto& g : log.groups) {
    for (const auto& e : g.events) {
      if (e.timestamp % kSecondsPerDay != 0) return TimestampResolution::kSeconds;
    }
  }
  return TimestampResolution::kDays;
}

void write_canonical_dump(const EventLog& log, std::ostream& out) {
  out << "entity\titem\ttimestamp\ttype\n";
  for (const auto& g : log.groups) {
    for (const auto& e : g.events) {
      write_field(out, g.entity);
      out << '\t';
      write_field(out, e.item);
      out << '\t' << e.timestamp << '\t';
      write_field(out, e.type);
      out << '\n';
    }
  }
}

}  // namespace recaudit
