#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tvar {

/// Calendar month.
struct YearMonth {
  int year = 1970;
  int month = 1;  ///< 1..12

  /// Months since year 0, so consecutive months differ by one.
  int index() const { return year * 12 + (month - 1); }
  static YearMonth from_index(int index);
  /// Parses "YYYY-MM".
  static YearMonth parse(const std::string& text);
  std::string str() const;

  YearMonth plus(int months) const { return from_index(index() + months); }
  friend auto operator<=>(const YearMonth&, const YearMonth&) = default;
};

/// Parses ISO-8601 ("2019-12-31", optionally followed by a time) or the
/// portal form "MM/DD/YYYY hh:mm:ss AM". Throws InputError on anything else.
YearMonth parse_incident_month(const std::string& text);

struct IncidentRecord {
  YearMonth month;
  std::string district_id;
  std::string fbi_code;
  std::string iucr_code;  ///< normalized to 4 characters
};

/// Left-pads numeric-looking IUCR codes to four characters ("110" -> "0110").
std::string normalize_iucr(std::string code);

/// Strips leading zeros and a trailing ".0" from numeric district ids
/// ("009" and "9.0" -> "9"); other ids are returned trimmed.
std::string normalize_district(std::string id);

inline constexpr const char* kMiscellaneousFbiCode = "26";
inline constexpr const char* kMiscellaneousLabel = "Miscellaneous Other";

/// Category label for an FBI code; unknown codes map to themselves.
std::string fbi_label(const std::string& fbi_code);
const std::map<std::string, std::string>& fbi_labels();

/// IUCR -> target category for records filed under the miscellaneous FBI code.
class ReclassTable {
 public:
  ReclassTable() = default;
  explicit ReclassTable(std::map<std::string, std::string> entries);

  /// The redistribution of FBI code 26 by IUCR code used for the Chicago tensor.
  static ReclassTable builtin();
  /// Reads a CSV with header `iucr,target_label`. Duplicate keys are an error.
  static ReclassTable from_csv(std::istream& in);
  static ReclassTable from_csv_file(const std::filesystem::path& path);

  std::optional<std::string> lookup(const std::string& iucr) const;
  const std::map<std::string, std::string>& entries() const { return entries_; }

  /// Every label a record can be assigned to under this table: the FBI code
  /// labels (minus the miscellaneous code), the table's targets, and the
  /// residual miscellaneous label.
  std::vector<std::string> category_set() const;

 private:
  std::map<std::string, std::string> entries_;
};

struct ReclassCounters {
  std::size_t unmapped_miscellaneous = 0;
  std::map<std::string, std::size_t> unmapped_iucr;
};

/// Category label of a record after redistribution of the miscellaneous code.
/// Miscellaneous records whose IUCR is not in the table keep the residual
/// label and are counted in `counters`.
std::string reclassify(const IncidentRecord& record, const ReclassTable& table,
                       ReclassCounters* counters = nullptr);

/// Monthly counts, K categories x Q districts x T months.
struct CountTensor {
  std::size_t K = 0, Q = 0, T = 0;
  std::vector<std::int64_t> counts;  ///< row-major [k][q][t]
  std::vector<std::string> category_labels;
  std::vector<std::string> district_labels;
  YearMonth start;

  std::size_t offset(std::size_t k, std::size_t q, std::size_t t) const { return (k * Q + q) * T + t; }
  std::int64_t& at(std::size_t k, std::size_t q, std::size_t t) { return counts[offset(k, q, t)]; }
  std::int64_t at(std::size_t k, std::size_t q, std::size_t t) const { return counts[offset(k, q, t)]; }
  std::int64_t total() const;

  /// Months [first, first + length) as a new tensor.
  CountTensor slice_months(std::size_t first, std::size_t length) const;

  /// Throws InputError when an invariant does not hold.
  void validate() const;
};

struct ColumnMapping {
  std::string date = "Date";
  std::string district = "District";
  std::string fbi_code = "FBI Code";
  std::string iucr = "IUCR";
};

struct IngestReport {
  std::size_t rows_read = 0;
  std::size_t records_kept = 0;
  std::size_t out_of_window = 0;
  std::size_t missing_district = 0;
  std::size_t duplicate_rows = 0;
  ReclassCounters reclass;
};

/// Reads long-format incident rows. Rows with an empty district are dropped and
/// counted; exact duplicate rows are dropped and counted. A malformed row raises
/// InputError naming its line.
std::vector<IncidentRecord> read_incidents(std::istream& in, const ColumnMapping& columns,
                                           IngestReport& report);

struct AggregateOptions {
  std::optional<YearMonth> window_start;  ///< default: earliest record
  std::optional<YearMonth> window_end;    ///< default: latest record (inclusive)
  std::vector<std::string> declared_categories;
  /// When non-empty, the district set is fixed and any other district is an error.
  std::vector<std::string> fixed_districts;
};

/// Counts records per (category, district, month). Output is independent of
/// input order: labels are sorted (districts numerically when all are integers).
CountTensor aggregate(std::span<const IncidentRecord> records, const ReclassTable& table,
                      const AggregateOptions& options, IngestReport& report);

// Serialization. JSON: labels plus a row-major integer array. Binary: "TVAR",
// a version byte, u32 K/Q/T, i32 start year, u32 start month, then
// little-endian i64 counts. The binary form carries no labels.
void write_tensor_json(const CountTensor& tensor, std::ostream& out);
CountTensor read_tensor_json(std::istream& in);
void write_tensor_binary(const CountTensor& tensor, std::ostream& out);
CountTensor read_tensor_binary(std::istream& in);
/// Detects the format from the leading bytes.
CountTensor load_tensor(const std::filesystem::path& path);

}  // namespace tvar
