#include "screenlab/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "screenlab/error.hpp"

namespace screenlab {

namespace {

std::string trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return std::string(text.substr(first, last - first + 1));
}

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

int parse_int(const std::string& text) {
  const std::string cell = trim(text);
  std::size_t used = 0;
  int value = 0;
  try {
    value = std::stoi(cell, &used);
  } catch (const std::exception&) {
    throw ValidationError("not an integer: '" + text + "'");
  }
  if (used != cell.size()) throw ValidationError("not an integer: '" + text + "'");
  return value;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string csv_escape(const std::string& value) {
  if (value.find_first_of(",\"\r\n") == std::string::npos) return value;
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

const std::vector<std::string>& logical_fields() {
  static const std::vector<std::string> fields = [] {
    std::vector<std::string> out;
    for (std::size_t i = 1; i <= kItemCount; ++i) out.push_back("a" + std::to_string(i));
    for (const char* name : {"age_months", "qchat_score", "sex", "ethnicity", "jaundice",
                             "family_asd", "respondent", "label"}) {
      out.emplace_back(name);
    }
    return out;
  }();
  return fields;
}

HeaderMap HeaderMap::defaults() {
  HeaderMap map;
  for (std::size_t i = 1; i <= kItemCount; ++i) map.columns_["a" + std::to_string(i)] = "A" + std::to_string(i);
  map.columns_["age_months"] = "Age_Mons";
  map.columns_["qchat_score"] = "Qchat-10-Score";
  map.columns_["sex"] = "Sex";
  map.columns_["ethnicity"] = "Ethnicity";
  map.columns_["jaundice"] = "Jaundice";
  map.columns_["family_asd"] = "Family_mem_with_ASD";
  map.columns_["respondent"] = "Who completed the test";
  map.columns_["label"] = "Class/ASD Traits";
  return map;
}

HeaderMap HeaderMap::load(const std::string& path) { return parse(read_file(path)); }

HeaderMap HeaderMap::parse(std::string_view text) {
  HeaderMap map = defaults();
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("header map line " + std::to_string(number) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "label_yes_value") {
      map.label_yes_ = value;
    } else if (key == "label_no_value") {
      map.label_no_ = value;
    } else {
      const auto& fields = logical_fields();
      if (std::find(fields.begin(), fields.end(), key) == fields.end()) {
        throw ValidationError("header map line " + std::to_string(number) + ": unknown field '" + key + "'");
      }
      map.set(key, value);
    }
  }
  map.validate();
  return map;
}

void HeaderMap::set(const std::string& field, std::string column) { columns_[field] = std::move(column); }

void HeaderMap::validate() const {
  std::set<std::string> seen;
  for (const auto& field : logical_fields()) {
    auto it = columns_.find(field);
    if (it == columns_.end() || it->second.empty()) {
      throw ValidationError("header map does not map field '" + field + "'");
    }
    if (!seen.insert(it->second).second) {
      throw ValidationError("header map maps two fields to column '" + it->second + "'");
    }
  }
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  if (text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      field.clear();
      row.clear();
      any = false;
    } else {
      field += c;
      any = true;
    }
  }
  if (quoted) throw ValidationError("unterminated quoted field at end of CSV");
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

IngestResult read_csv(const std::string& path, const HeaderMap& map, IngestOptions options) {
  return read_csv_text(read_file(path), map, options);
}

IngestResult read_csv_text(std::string_view text, const HeaderMap& map, IngestOptions options) {
  map.validate();
  const auto rows = parse_csv(text);
  if (rows.empty()) throw ValidationError("CSV has no header row");

  std::map<std::string, std::size_t> index;  // logical field -> CSV position
  for (const auto& field : logical_fields()) {
    const std::string& wanted = map.column(field);
    const auto& header = rows.front();
    auto it = std::find_if(header.begin(), header.end(),
                           [&](const std::string& h) { return trim(h) == trim(wanted); });
    if (it == header.end()) {
      throw ValidationError("CSV is missing column '" + wanted + "' (field " + field + ")");
    }
    index[field] = static_cast<std::size_t>(it - header.begin());
  }

  IngestResult result;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& cells = rows[r];
    ++result.rows_read;
    std::string column;
    try {
      auto cell = [&](const std::string& field) -> const std::string& {
        column = map.column(field);
        const std::size_t at = index.at(field);
        if (at >= cells.size()) throw ValidationError("row has only " + std::to_string(cells.size()) + " cells");
        return cells[at];
      };
      ScreeningRecord record;
      for (std::size_t i = 0; i < kItemCount; ++i) {
        const std::string& raw = cell("a" + std::to_string(i + 1));
        const std::string value = trim(raw);
        if (value != "0" && value != "1") throw ValidationError("item must be 0 or 1, got '" + raw + "'");
        record.items[i] = value == "1" ? 1 : 0;
      }
      record.age_months = parse_int(cell("age_months"));
      if (record.age_months < 1) throw ValidationError("age_months must be >= 1");
      record.qchat_score = parse_int(cell("qchat_score"));
      record.sex = parse_sex(cell("sex"));
      record.ethnicity = trim(cell("ethnicity"));
      if (record.ethnicity.empty()) throw ValidationError("ethnicity is empty");
      record.jaundice = parse_yes_no(cell("jaundice"));
      record.family_asd = parse_yes_no(cell("family_asd"));
      record.respondent = trim(cell("respondent"));
      if (record.respondent.empty()) throw ValidationError("respondent is empty");
      const std::string label = trim(cell("label"));
      if (!map.label_yes_value().empty() && iequals(label, map.label_yes_value())) {
        record.label = Label::Yes;
      } else if (!map.label_no_value().empty() && iequals(label, map.label_no_value())) {
        record.label = Label::No;
      } else {
        record.label = parse_label(label);
      }
      column.clear();
      validate(record);
      result.records.push_back(std::move(record));
    } catch (const ValidationError& error) {
      RowError row_error{r, column, error.what()};
      if (options.strict) {
        throw ValidationError("row " + std::to_string(r) +
                              (column.empty() ? "" : ", column '" + column + "'") + ": " + error.what());
      }
      result.errors.push_back(std::move(row_error));
    }
  }
  return result;
}

void write_csv(std::ostream& out, std::span<const ScreeningRecord> records, const HeaderMap& map) {
  const auto& fields = logical_fields();
  for (std::size_t f = 0; f < fields.size(); ++f) {
    out << (f ? "," : "") << csv_escape(map.column(fields[f]));
  }
  out << "\n";
  const std::string yes = map.label_yes_value().empty() ? "Yes" : map.label_yes_value();
  const std::string no = map.label_no_value().empty() ? "No" : map.label_no_value();
  for (const auto& record : records) {
    for (int item : record.items) out << item << ",";
    out << record.age_months << "," << record.qchat_score << ","
        << (record.sex == Sex::Male ? "m" : "f") << "," << csv_escape(record.ethnicity) << ","
        << (record.jaundice ? "yes" : "no") << "," << (record.family_asd ? "yes" : "no") << ","
        << csv_escape(record.respondent) << "," << csv_escape(record.label == Label::Yes ? yes : no)
        << "\n";
  }
}

void write_csv(const std::string& path, std::span<const ScreeningRecord> records, const HeaderMap& map) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_csv(out, records, map);
  if (!out) throw std::runtime_error("write failed: " + path);
}

ConsistencyReport validate_consistency(std::span<const ScreeningRecord> records) {
  ConsistencyReport report;
  report.records = records.size();
  for (const auto& record : records) {
    const bool binary = std::all_of(record.items.begin(), record.items.end(),
                                    [](int v) { return v == 0 || v == 1; });
    if (!binary) {
      ++report.item_out_of_range;
    } else {
      const int score = qchat_score(record.items);
      if (score != record.qchat_score) ++report.score_mismatch;
      if (record.label != derive_label(score)) ++report.label_mismatch;
    }
    if (record.age_months < 1) ++report.age_out_of_range;
  }
  return report;
}

std::string format_consistency(const ConsistencyReport& report) {
  std::ostringstream out;
  out << "records=" << report.records << "\n"
      << "item_out_of_range=" << report.item_out_of_range << "\n"
      << "score_mismatch=" << report.score_mismatch << "\n"
      << "label_mismatch=" << report.label_mismatch << "\n"
      << "age_out_of_range=" << report.age_out_of_range << "\n";
  return out.str();
}

}  // namespace screenlab
