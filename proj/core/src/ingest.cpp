#include "tvar/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "tvar/csv.hpp"
#include "tvar/error.hpp"

namespace tvar {

using nlohmann::json;

YearMonth YearMonth::from_index(int index) {
  const int year = index >= 0 ? index / 12 : -((-index + 11) / 12);
  return YearMonth{year, index - year * 12 + 1};
}

namespace {

std::optional<int> parse_int(std::string_view text) {
  if (text.empty()) return std::nullopt;
  int value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

int days_in_month(int year, int month) {
  static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  const bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
  return month == 2 && leap ? 29 : kDays[month - 1];
}

std::optional<YearMonth> checked_date(int year, int month, int day) {
  if (year < 1 || month < 1 || month > 12 || day < 1 || day > days_in_month(year, month))
    return std::nullopt;
  return YearMonth{year, month};
}

bool valid_clock(std::string_view s, bool twelve_hour) {
  // hh:mm or hh:mm:ss
  if (s.size() != 5 && s.size() != 8) return false;
  if (s[2] != ':' || (s.size() == 8 && s[5] != ':')) return false;
  const auto h = parse_int(s.substr(0, 2));
  const auto m = parse_int(s.substr(3, 2));
  const auto sec = s.size() == 8 ? parse_int(s.substr(6, 2)) : std::optional<int>(0);
  if (!h || !m || !sec) return false;
  if (twelve_hour ? (*h < 1 || *h > 12) : (*h < 0 || *h > 23)) return false;
  return *m >= 0 && *m < 60 && *sec >= 0 && *sec < 61;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

bool numeric_less(const std::string& a, const std::string& b) {
  if (all_digits(a) && all_digits(b)) {
    const auto ia = std::stoll(a), ib = std::stoll(b);
    if (ia != ib) return ia < ib;
  }
  return a < b;
}

std::uint64_t fnv1a(std::span<const std::string> fields) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& f : fields) {
    for (unsigned char c : f) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    h ^= 0x1f;  // field separator
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

YearMonth YearMonth::parse(const std::string& text) {
  const std::string s = trim(text);
  if (s.size() == 7 && s[4] == '-') {
    const auto y = parse_int(std::string_view(s).substr(0, 4));
    const auto m = parse_int(std::string_view(s).substr(5, 2));
    if (y && m && *m >= 1 && *m <= 12) return YearMonth{*y, *m};
  }
  throw InputError("invalid month '" + text + "' (expected YYYY-MM)");
}

std::string YearMonth::str() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d", year, month);
  return buf;
}

YearMonth parse_incident_month(const std::string& raw) {
  const std::string s = trim(raw);
  const std::string_view v(s);
  // ISO-8601: YYYY-MM-DD[(T| )time...]
  if (v.size() >= 10 && v[4] == '-' && v[7] == '-') {
    const auto y = parse_int(v.substr(0, 4));
    const auto m = parse_int(v.substr(5, 2));
    const auto d = parse_int(v.substr(8, 2));
    const bool tail_ok = v.size() == 10 || v[10] == 'T' || v[10] == ' ';
    if (y && m && d && tail_ok) {
      if (v.size() > 10) {
        const std::string_view clock = v.substr(11);
        const bool ok = (clock.size() >= 8 && valid_clock(clock.substr(0, 8), false)) ||
                        (clock.size() >= 5 && valid_clock(clock.substr(0, 5), false));
        if (!ok) throw InputError("invalid time in date '" + raw + "'");
      }
      if (auto ym = checked_date(*y, *m, *d)) return *ym;
    }
    throw InputError("invalid date '" + raw + "'");
  }
  // Portal form: MM/DD/YYYY[ hh:mm:ss AM|PM]
  if (v.size() >= 10 && v[2] == '/' && v[5] == '/') {
    const auto m = parse_int(v.substr(0, 2));
    const auto d = parse_int(v.substr(3, 2));
    const auto y = parse_int(v.substr(6, 4));
    bool tail_ok = v.size() == 10;
    if (!tail_ok && v[10] == ' ') {
      const std::string_view rest = v.substr(11);
      const auto space = rest.find(' ');
      if (space != std::string_view::npos) {
        const std::string_view clock = rest.substr(0, space);
        const std::string_view ampm = rest.substr(space + 1);
        tail_ok = valid_clock(clock, true) && (ampm == "AM" || ampm == "PM");
      }
    }
    if (m && d && y && tail_ok) {
      if (auto ym = checked_date(*y, *m, *d)) return *ym;
    }
  }
  throw InputError("invalid date '" + raw + "'");
}

std::string normalize_iucr(std::string code) {
  code = trim(std::move(code));
  if (!code.empty() && code.size() < 4) code.insert(0, 4 - code.size(), '0');
  return code;
}

std::string normalize_district(std::string id) {
  id = trim(std::move(id));
  if (id.size() > 2 && id.ends_with(".0")) id.resize(id.size() - 2);
  if (id.empty() || !std::all_of(id.begin(), id.end(), [](unsigned char c) { return std::isdigit(c); })) return id;
  const auto nz = id.find_first_not_of('0');
  return nz == std::string::npos ? "0" : id.substr(nz);
}

const std::map<std::string, std::string>& fbi_labels() {
  static const std::map<std::string, std::string> labels = {
      {"01A", "Homicide"},
      {"01B", "Involuntary Manslaughter"},
      {"02", "Criminal Sexual Assault"},
      {"03", "Robbery"},
      {"04A", "Aggravated Assault"},
      {"04B", "Aggravated Battery"},
      {"05", "Burglary"},
      {"06", "Larceny"},
      {"07", "Motor Vehicle Theft"},
      {"08A", "Simple Assault"},
      {"08B", "Simple Battery"},
      {"09", "Arson"},
      {"10", "Forgery & Counterfeiting"},
      {"11", "Fraud"},
      {"12", "Embezzlement"},
      {"13", "Stolen Property"},
      {"14", "Vandalism"},
      {"15", "Weapons Violation"},
      {"16", "Prostitution"},
      {"17", "Criminal Sexual Abuse"},
      {"18", "Drug Abuse"},
      {"19", "Gambling"},
      {"20", "Offenses Against Family"},
      {"22", "Liquor License"},
      {"24", "Disorderly Conduct"},
      {"26", kMiscellaneousLabel},
  };
  return labels;
}

std::string fbi_label(const std::string& fbi_code) {
  const auto& labels = fbi_labels();
  const auto it = labels.find(fbi_code);
  return it == labels.end() ? fbi_code : it->second;
}

ReclassTable::ReclassTable(std::map<std::string, std::string> entries) {
  for (auto& [iucr, label] : entries) {
    if (label.empty()) throw InputError("reclassification table: empty target for IUCR " + iucr);
    entries_.emplace(normalize_iucr(iucr), std::move(label));
  }
}

ReclassTable ReclassTable::builtin() {
  std::map<std::string, std::string> e;
  const auto add = [&e](const char* label, std::initializer_list<const char*> codes) {
    for (const char* c : codes) e.emplace(c, label);
  };
  add("Arson", {"1030", "1035", "5003"});
  add("Prostitution", {"1050"});
  add("Criminal Trespassing", {"1330", "1335", "1350", "1360", "1365"});
  add("Kidnapping & Child Harm", {"1537", "1710", "1715", "1725", "1755", "1780", "1790", "1792",
                                  "4210", "4220", "4230", "4240", "4255"});
  add("Drug Abuse", {"2091", "2092", "2093", "2111", "2120", "2160"});
  add("Threat & Harassment",
      {"2820", "2825", "2826", "3960", "3966", "3970", "3975", "3980", "4386", "4387"});
  add("Disorderly Conduct", {"2850", "2851", "2890", "2895", "3000", "3200", "3300", "3400",
                             "3770", "3800", "3910", "3920"});
  add("Burglary", {"4310", "4860", "5007", "5008"});
  return ReclassTable(std::move(e));
}

ReclassTable ReclassTable::from_csv(std::istream& in) {
  CsvReader reader(in);
  std::vector<std::string> row;
  if (!reader.next(row)) throw InputError("reclassification table is empty");
  const auto find_col = [&row](const char* name) {
    const auto it = std::find(row.begin(), row.end(), name);
    if (it == row.end())
      throw InputError(std::string("reclassification table: missing column '") + name + "'");
    return static_cast<std::size_t>(it - row.begin());
  };
  const std::size_t ci = find_col("iucr");
  const std::size_t cl = find_col("target_label");
  std::map<std::string, std::string> entries;
  while (reader.next(row)) {
    if (row.size() == 1 && trim(row[0]).empty()) continue;
    if (row.size() <= std::max(ci, cl))
      throw InputError("reclassification table: short row on line " + std::to_string(reader.line()));
    const std::string key = normalize_iucr(row[ci]);
    if (!entries.emplace(key, trim(row[cl])).second)
      throw InputError("reclassification table: duplicate IUCR " + key + " on line " +
                       std::to_string(reader.line()));
  }
  return ReclassTable(std::move(entries));
}

ReclassTable ReclassTable::from_csv_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open reclassification table " + path.string());
  return from_csv(in);
}

std::optional<std::string> ReclassTable::lookup(const std::string& iucr) const {
  const auto it = entries_.find(normalize_iucr(iucr));
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> ReclassTable::category_set() const {
  std::set<std::string> labels;
  for (const auto& [code, label] : fbi_labels())
    if (code != kMiscellaneousFbiCode) labels.insert(label);
  for (const auto& [iucr, label] : entries_) labels.insert(label);
  labels.insert(kMiscellaneousLabel);
  return {labels.begin(), labels.end()};
}

std::string reclassify(const IncidentRecord& record, const ReclassTable& table,
                       ReclassCounters* counters) {
  if (record.fbi_code != kMiscellaneousFbiCode) return fbi_label(record.fbi_code);
  if (auto target = table.lookup(record.iucr_code)) return *target;
  if (counters) {
    ++counters->unmapped_miscellaneous;
    ++counters->unmapped_iucr[record.iucr_code];
  }
  return kMiscellaneousLabel;
}

std::int64_t CountTensor::total() const {
  std::int64_t sum = 0;
  for (auto c : counts) sum += c;
  return sum;
}

CountTensor CountTensor::slice_months(std::size_t first, std::size_t length) const {
  if (first + length > T) throw InputError("slice_months: range exceeds tensor length");
  CountTensor out;
  out.K = K;
  out.Q = Q;
  out.T = length;
  out.category_labels = category_labels;
  out.district_labels = district_labels;
  out.start = start.plus(static_cast<int>(first));
  out.counts.resize(K * Q * length);
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t q = 0; q < Q; ++q)
      for (std::size_t t = 0; t < length; ++t) out.at(k, q, t) = at(k, q, first + t);
  return out;
}

void CountTensor::validate() const {
  if (K == 0 || Q == 0 || T == 0) throw InputError("count tensor has an empty dimension");
  if (counts.size() != K * Q * T)
    throw InputError("count tensor: expected " + std::to_string(K * Q * T) + " cells, found " +
                     std::to_string(counts.size()));
  if (category_labels.size() != K || district_labels.size() != Q)
    throw InputError("count tensor: label count does not match dimensions");
  if (std::any_of(counts.begin(), counts.end(), [](std::int64_t c) { return c < 0; }))
    throw InputError("count tensor contains negative counts");
  const auto unique = [](std::vector<std::string> v) {
    std::sort(v.begin(), v.end());
    return std::adjacent_find(v.begin(), v.end()) == v.end();
  };
  if (!unique(category_labels)) throw InputError("count tensor: duplicate category label");
  if (!unique(district_labels)) throw InputError("count tensor: duplicate district label");
  if (start.month < 1 || start.month > 12) throw InputError("count tensor: invalid start month");
}

std::vector<IncidentRecord> read_incidents(std::istream& in, const ColumnMapping& columns,
                                           IngestReport& report) {
  CsvReader reader(in);
  std::vector<std::string> row;
  if (!reader.next(row)) throw InputError("incident CSV is empty (header row required)");

  const auto col = [&row](const std::string& name) {
    const auto it = std::find_if(row.begin(), row.end(),
                                 [&name](const std::string& h) { return trim(h) == name; });
    if (it == row.end()) throw InputError("incident CSV: missing column '" + name + "'");
    return static_cast<std::size_t>(it - row.begin());
  };
  const std::size_t c_date = col(columns.date);
  const std::size_t c_district = col(columns.district);
  const std::size_t c_fbi = col(columns.fbi_code);
  const std::size_t c_iucr = col(columns.iucr);
  const std::size_t needed = std::max({c_date, c_district, c_fbi, c_iucr}) + 1;

  std::vector<IncidentRecord> records;
  std::unordered_set<std::uint64_t> seen;
  while (reader.next(row)) {
    if (row.size() == 1 && trim(row[0]).empty()) continue;
    ++report.rows_read;
    const std::string where = "line " + std::to_string(reader.line());
    if (row.size() < needed)
      throw InputError("incident CSV " + where + ": expected at least " + std::to_string(needed) +
                       " fields, found " + std::to_string(row.size()));
    if (!seen.insert(fnv1a(row)).second) {
      ++report.duplicate_rows;
      continue;
    }
    IncidentRecord rec;
    try {
      rec.month = parse_incident_month(row[c_date]);
    } catch (const InputError& e) {
      throw InputError("incident CSV " + where + ": " + e.what());
    }
    rec.district_id = normalize_district(row[c_district]);
    rec.fbi_code = trim(row[c_fbi]);
    rec.iucr_code = normalize_iucr(row[c_iucr]);
    if (rec.fbi_code.empty()) throw InputError("incident CSV " + where + ": empty FBI code");
    if (rec.district_id.empty()) {
      ++report.missing_district;
      continue;
    }
    records.push_back(std::move(rec));
  }
  return records;
}

CountTensor aggregate(std::span<const IncidentRecord> records, const ReclassTable& table,
                      const AggregateOptions& options, IngestReport& report) {
  YearMonth lo, hi;
  if (options.window_start && options.window_end) {
    lo = *options.window_start;
    hi = *options.window_end;
  } else {
    if (records.empty()) throw InputError("aggregate: no records and no explicit window");
    const auto [mn, mx] = std::minmax_element(
        records.begin(), records.end(),
        [](const IncidentRecord& a, const IncidentRecord& b) { return a.month < b.month; });
    lo = options.window_start.value_or(mn->month);
    hi = options.window_end.value_or(mx->month);
  }
  if (hi < lo) throw InputError("aggregate: window end " + hi.str() + " precedes start " + lo.str());

  std::set<std::string> fixed;
  for (const auto& d : options.fixed_districts) fixed.insert(normalize_district(d));
  std::set<std::string> categories(options.declared_categories.begin(),
                                   options.declared_categories.end());
  std::set<std::string> districts = fixed;

  struct Cell {
    std::string category;
    const IncidentRecord* record;
  };
  std::vector<Cell> kept;
  kept.reserve(records.size());
  std::set<std::string> unknown;
  for (const auto& r : records) {
    if (r.month < lo || hi < r.month) {
      ++report.out_of_window;
      continue;
    }
    if (!fixed.empty() && !fixed.contains(r.district_id)) {
      unknown.insert(r.district_id);
      continue;
    }
    std::string label = reclassify(r, table, &report.reclass);
    categories.insert(label);
    districts.insert(r.district_id);
    kept.push_back({std::move(label), &r});
  }
  if (!unknown.empty()) {
    std::string list;
    for (const auto& d : unknown) list += (list.empty() ? "" : ", ") + d;
    throw InputError("aggregate: districts not in the configured list: " + list);
  }
  if (kept.empty()) throw InputError("aggregate: no records inside window " + lo.str() + ".." + hi.str());

  CountTensor out;
  out.category_labels.assign(categories.begin(), categories.end());
  out.district_labels.assign(districts.begin(), districts.end());
  std::sort(out.district_labels.begin(), out.district_labels.end(), numeric_less);
  out.K = out.category_labels.size();
  out.Q = out.district_labels.size();
  out.T = static_cast<std::size_t>(hi.index() - lo.index() + 1);
  out.start = lo;
  out.counts.assign(out.K * out.Q * out.T, 0);

  std::map<std::string, std::size_t> kidx, qidx;
  for (std::size_t k = 0; k < out.K; ++k) kidx[out.category_labels[k]] = k;
  for (std::size_t q = 0; q < out.Q; ++q) qidx[out.district_labels[q]] = q;
  for (const auto& c : kept) {
    const auto t = static_cast<std::size_t>(c.record->month.index() - lo.index());
    ++out.at(kidx.at(c.category), qidx.at(c.record->district_id), t);
  }
  report.records_kept += kept.size();
  return out;
}

void write_tensor_json(const CountTensor& tensor, std::ostream& out) {
  json j;
  j["format"] = "tvar-count-tensor";
  j["version"] = 1;
  j["dims"] = {tensor.K, tensor.Q, tensor.T};
  j["start"] = tensor.start.str();
  j["category_labels"] = tensor.category_labels;
  j["district_labels"] = tensor.district_labels;
  j["counts"] = tensor.counts;
  out << j.dump() << '\n';
}

CountTensor read_tensor_json(std::istream& in) {
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw InputError(std::string("tensor JSON: ") + e.what());
  }
  CountTensor t;
  try {
    if (j.value("format", "") != "tvar-count-tensor") throw InputError("tensor JSON: unknown format tag");
    const auto dims = j.at("dims").get<std::vector<std::size_t>>();
    if (dims.size() != 3) throw InputError("tensor JSON: dims must have three entries");
    t.K = dims[0];
    t.Q = dims[1];
    t.T = dims[2];
    t.start = YearMonth::parse(j.at("start").get<std::string>());
    t.category_labels = j.at("category_labels").get<std::vector<std::string>>();
    t.district_labels = j.at("district_labels").get<std::vector<std::string>>();
    t.counts = j.at("counts").get<std::vector<std::int64_t>>();
  } catch (const json::exception& e) {
    throw InputError(std::string("tensor JSON: ") + e.what());
  }
  t.validate();
  return t;
}

namespace {

template <typename T>
void put_le(std::ostream& out, T value) {
  using U = std::make_unsigned_t<T>;
  auto u = static_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.put(static_cast<char>(u & 0xFF));
    u = static_cast<U>(u >> 8);
  }
}

template <typename T>
T get_le(std::istream& in) {
  using U = std::make_unsigned_t<T>;
  U u = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    const int c = in.get();
    if (c == std::char_traits<char>::eof()) throw InputError("tensor binary: truncated file");
    u = static_cast<U>(u | (static_cast<U>(static_cast<unsigned char>(c)) << (8 * i)));
  }
  return static_cast<T>(u);
}

constexpr char kMagic[4] = {'T', 'V', 'A', 'R'};
constexpr std::uint8_t kBinaryVersion = 1;

}  // namespace

void write_tensor_binary(const CountTensor& tensor, std::ostream& out) {
  out.write(kMagic, 4);
  out.put(static_cast<char>(kBinaryVersion));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(tensor.K));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(tensor.Q));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(tensor.T));
  put_le<std::int32_t>(out, tensor.start.year);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(tensor.start.month));
  for (auto c : tensor.counts) put_le<std::int64_t>(out, c);
}

CountTensor read_tensor_binary(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || !std::equal(magic, magic + 4, kMagic)) throw InputError("tensor binary: bad magic bytes");
  const int version = in.get();
  if (version != kBinaryVersion)
    throw InputError("tensor binary: unsupported version " + std::to_string(version));
  CountTensor t;
  t.K = get_le<std::uint32_t>(in);
  t.Q = get_le<std::uint32_t>(in);
  t.T = get_le<std::uint32_t>(in);
  t.start.year = get_le<std::int32_t>(in);
  t.start.month = static_cast<int>(get_le<std::uint32_t>(in));
  t.counts.resize(t.K * t.Q * t.T);
  for (auto& c : t.counts) c = get_le<std::int64_t>(in);
  for (std::size_t k = 0; k < t.K; ++k) t.category_labels.push_back("category_" + std::to_string(k));
  for (std::size_t q = 0; q < t.Q; ++q) t.district_labels.push_back("district_" + std::to_string(q));
  t.validate();
  return t;
}

CountTensor load_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open tensor file " + path.string());
  char head[4] = {};
  in.read(head, 4);
  in.clear();
  in.seekg(0);
  if (std::equal(head, head + 4, kMagic)) return read_tensor_binary(in);
  return read_tensor_json(in);
}

}  // namespace tvar
