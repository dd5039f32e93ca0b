#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "screenlab/data_model.hpp"

namespace screenlab {

/// Logical record fields in schema order: a1..a10, age_months, qchat_score,
/// sex, ethnicity, jaundice, family_asd, respondent, label.
const std::vector<std::string>& logical_fields();

/// Logical field -> CSV column name. Loaded from `key = value` lines so that
/// differently spelled copies of the dataset need no code change.
class HeaderMap {
 public:
  /// Column names of the public toddler screening file.
  static HeaderMap defaults();
  /// Reads `field = column` lines; `#` starts a comment. Unlisted fields keep
  /// their defaults. Also accepts label_yes_value / label_no_value.
  static HeaderMap load(const std::string& path);
  static HeaderMap parse(std::string_view text);

  const std::string& column(const std::string& field) const { return columns_.at(field); }
  void set(const std::string& field, std::string column);
  /// Extra class strings accepted besides Yes/No (e.g. "ASD traits").
  const std::string& label_yes_value() const { return label_yes_; }
  const std::string& label_no_value() const { return label_no_; }

  /// Throws ValidationError unless every field is mapped to a distinct column.
  void validate() const;

 private:
  std::map<std::string, std::string> columns_;
  std::string label_yes_;
  std::string label_no_;
};

struct RowError {
  std::size_t row = 0;  // 1-based data row (the header is row 0)
  std::string column;   // CSV column name, empty for row-level checks
  std::string message;
};

struct IngestResult {
  std::vector<ScreeningRecord> records;
  std::vector<RowError> errors;  // quarantined rows
  std::size_t rows_read = 0;
};

struct IngestOptions {
  /// Abort with ValidationError on the first bad row instead of quarantining it.
  bool strict = false;
};

/// Splits CSV text into rows of fields (quotes, doubled quotes, CRLF, BOM).
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

IngestResult read_csv(const std::string& path, const HeaderMap& map = HeaderMap::defaults(),
                      IngestOptions options = {});
IngestResult read_csv_text(std::string_view text, const HeaderMap& map = HeaderMap::defaults(),
                           IngestOptions options = {});

void write_csv(std::ostream& out, std::span<const ScreeningRecord> records,
               const HeaderMap& map = HeaderMap::defaults());
void write_csv(const std::string& path, std::span<const ScreeningRecord> records,
               const HeaderMap& map = HeaderMap::defaults());

struct ConsistencyReport {
  std::size_t records = 0;
  std::size_t item_out_of_range = 0;
  std::size_t score_mismatch = 0;
  std::size_t label_mismatch = 0;
  std::size_t age_out_of_range = 0;

  bool clean() const {
    return item_out_of_range + score_mismatch + label_mismatch + age_out_of_range == 0;
  }
};

/// Counts invariant violations per kind without modifying anything.
ConsistencyReport validate_consistency(std::span<const ScreeningRecord> records);
std::string format_consistency(const ConsistencyReport& report);

}  // namespace screenlab
