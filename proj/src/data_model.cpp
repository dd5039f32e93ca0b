#include "screenlab/data_model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "screenlab/error.hpp"
#include "screenlab/random.hpp"

namespace screenlab {

namespace {

std::string lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return std::string(text.substr(first, last - first + 1));
}

constexpr const char* kEthnicityGroup = "ethnicity";
constexpr const char* kRespondentGroup = "respondent";

}  // namespace

LikertAnswer parse_likert(std::string_view text) {
  const std::string word = lower(trim(text));
  if (word == "always") return LikertAnswer::Always;
  if (word == "usually") return LikertAnswer::Usually;
  if (word == "sometimes") return LikertAnswer::Sometimes;
  if (word == "rarely") return LikertAnswer::Rarely;
  if (word == "never") return LikertAnswer::Never;
  throw ValidationError("not a Likert answer: '" + std::string(text) +
                        "' (expected Always, Usually, Sometimes, Rarely or Never)");
}

std::string_view to_string(LikertAnswer answer) {
  switch (answer) {
    case LikertAnswer::Always: return "Always";
    case LikertAnswer::Usually: return "Usually";
    case LikertAnswer::Sometimes: return "Sometimes";
    case LikertAnswer::Rarely: return "Rarely";
    case LikertAnswer::Never: return "Never";
  }
  return "?";
}

Label parse_label(std::string_view text) {
  const std::string word = lower(trim(text));
  if (word == "yes") return Label::Yes;
  if (word == "no") return Label::No;
  throw ValidationError("not a class label: '" + std::string(text) + "' (expected Yes or No)");
}

std::string_view to_string(Label label) { return label == Label::Yes ? "Yes" : "No"; }

Sex parse_sex(std::string_view text) {
  const std::string word = lower(trim(text));
  if (word == "m" || word == "male") return Sex::Male;
  if (word == "f" || word == "female") return Sex::Female;
  throw ValidationError("not a sex value: '" + std::string(text) + "' (expected Male or Female)");
}

std::string_view to_string(Sex sex) { return sex == Sex::Male ? "Male" : "Female"; }

bool parse_yes_no(std::string_view text) {
  const std::string word = lower(trim(text));
  if (word == "yes" || word == "y" || word == "true") return true;
  if (word == "no" || word == "n" || word == "false") return false;
  throw ValidationError("not a yes/no value: '" + std::string(text) + "'");
}

int score_item(int item_index, LikertAnswer answer) {
  if (item_index < 1 || item_index > static_cast<int>(kItemCount)) {
    throw ValidationError("item index out of range: " + std::to_string(item_index));
  }
  if (item_index == static_cast<int>(kItemCount)) {
    return answer == LikertAnswer::Rarely || answer == LikertAnswer::Never ? 0 : 1;
  }
  return answer == LikertAnswer::Always || answer == LikertAnswer::Usually ? 0 : 1;
}

int qchat_score(std::span<const int, kItemCount> items) {
  int total = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i] != 0 && items[i] != 1) {
      throw ValidationError("item A" + std::to_string(i + 1) + " is not binary: " +
                            std::to_string(items[i]));
    }
    total += items[i];
  }
  return total;
}

Label derive_label(int score) {
  if (score < 0 || score > static_cast<int>(kItemCount)) {
    throw ValidationError("Q-chat score out of range 0..10: " + std::to_string(score));
  }
  return score > kTraitThreshold ? Label::Yes : Label::No;
}

ScreeningRecord make_record(std::array<int, kItemCount> items, int age_months, Sex sex,
                            std::string ethnicity, bool jaundice, bool family_asd,
                            std::string respondent) {
  ScreeningRecord record;
  record.items = items;
  record.age_months = age_months;
  record.sex = sex;
  record.ethnicity = std::move(ethnicity);
  record.jaundice = jaundice;
  record.family_asd = family_asd;
  record.respondent = std::move(respondent);
  record.qchat_score = qchat_score(record.items);
  record.label = derive_label(record.qchat_score);
  validate(record);
  return record;
}

void validate(const ScreeningRecord& record) {
  const int score = qchat_score(record.items);
  if (record.qchat_score != score) {
    throw ValidationError("Q-chat score " + std::to_string(record.qchat_score) +
                          " does not equal the item sum " + std::to_string(score));
  }
  if (record.label != derive_label(score)) {
    throw ValidationError("label " + std::string(to_string(record.label)) +
                          " disagrees with Q-chat score " + std::to_string(score));
  }
  if (record.age_months < 1) {
    throw ValidationError("age_months must be >= 1, got " + std::to_string(record.age_months));
  }
  if (record.ethnicity.empty()) throw ValidationError("ethnicity is empty");
  if (record.respondent.empty()) throw ValidationError("respondent is empty");
}

std::string_view to_string(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::Binary: return "binary";
    case ColumnKind::Numeric: return "numeric";
    case ColumnKind::OneHot: return "onehot";
  }
  return "?";
}

ColumnKind parse_column_kind(std::string_view text) {
  if (text == "binary") return ColumnKind::Binary;
  if (text == "numeric") return ColumnKind::Numeric;
  if (text == "onehot") return ColumnKind::OneHot;
  throw ValidationError("unknown column kind: " + std::string(text));
}

Schema::Schema(std::vector<Column> columns) : columns_(std::move(columns)) {
  std::set<std::string> names;
  std::set<std::string> closed_groups;
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    const Column& column = columns_[i];
    if (!names.insert(column.name).second) {
      throw ValidationError("duplicate column name: " + column.name);
    }
    if (lower(column.name).find("qchat") != std::string::npos) {
      throw ValidationError("the Q-chat score must not be a predictor column");
    }
    if (column.kind == ColumnKind::OneHot) {
      if (column.group.empty()) throw ValidationError("one-hot column without group: " + column.name);
      if (!attributes_.empty() && attributes_.back().categorical &&
          attributes_.back().name == column.group) {
        attributes_.back().columns.push_back(i);
      } else {
        if (closed_groups.count(column.group)) {
          throw ValidationError("one-hot group '" + column.group + "' is not contiguous");
        }
        closed_groups.insert(column.group);
        attributes_.push_back({column.group, true, {i}});
      }
    } else {
      attributes_.push_back({column.name, false, {i}});
    }
    column_attribute_.push_back(attributes_.size() - 1);
  }
}

Schema Schema::for_categories(std::vector<std::string> ethnicities,
                              std::vector<std::string> respondents) {
  std::vector<Column> columns;
  for (std::size_t i = 1; i <= kItemCount; ++i) {
    columns.push_back({"A" + std::to_string(i), ColumnKind::Binary, "", ""});
  }
  columns.push_back({"age_months", ColumnKind::Numeric, "", ""});
  columns.push_back({"sex_male", ColumnKind::Binary, "", ""});
  columns.push_back({"jaundice", ColumnKind::Binary, "", ""});
  columns.push_back({"family_asd", ColumnKind::Binary, "", ""});
  auto add_group = [&columns](const char* group, std::vector<std::string> categories) {
    std::sort(categories.begin(), categories.end());
    categories.erase(std::unique(categories.begin(), categories.end()), categories.end());
    for (auto& category : categories) {
      columns.push_back({std::string(group) + "=" + category, ColumnKind::OneHot, group, category});
    }
  };
  add_group(kEthnicityGroup, std::move(ethnicities));
  add_group(kRespondentGroup, std::move(respondents));
  return Schema(std::move(columns));
}

Schema Schema::from_records(std::span<const ScreeningRecord> records) {
  std::vector<std::string> ethnicities;
  std::vector<std::string> respondents;
  for (const auto& record : records) {
    ethnicities.push_back(record.ethnicity);
    respondents.push_back(record.respondent);
  }
  return for_categories(std::move(ethnicities), std::move(respondents));
}

std::optional<std::size_t> Schema::find(std::string_view name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].name == name) return i;
  }
  return std::nullopt;
}

void require_same_schema(const Schema& expected, const Schema& actual) {
  const std::size_t common = std::min(expected.size(), actual.size());
  for (std::size_t i = 0; i < common; ++i) {
    if (!(expected[i] == actual[i])) {
      throw SchemaMismatch("schema mismatch at column " + std::to_string(i) + ": expected '" +
                           expected[i].name + "' (" + std::string(to_string(expected[i].kind)) +
                           "), found '" + actual[i].name + "' (" +
                           std::string(to_string(actual[i].kind)) + ")");
    }
  }
  if (expected.size() != actual.size()) {
    const bool expected_longer = expected.size() > actual.size();
    const std::string col = expected_longer ? expected[common].name : actual[common].name;
    throw SchemaMismatch("schema mismatch at column " + std::to_string(common) + ": '" + col +
                         (expected_longer ? "' is missing" : "' is unexpected"));
  }
}

FeatureMatrix FeatureMatrix::select(std::span<const std::size_t> indices) const {
  FeatureMatrix out;
  out.schema = schema;
  out.positive_class = positive_class;
  out.values.reserve(indices.size() * cols());
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) {
    const auto r = row(i);
    out.values.insert(out.values.end(), r.begin(), r.end());
    out.labels.push_back(labels[i]);
  }
  return out;
}

std::vector<double> encode_row(const Schema& schema, const ScreeningRecord& record,
                               std::vector<std::string>* warnings) {
  std::vector<double> row(schema.size(), 0.0);
  std::map<std::string, bool> group_hit;
  for (std::size_t c = 0; c < schema.size(); ++c) {
    const Column& column = schema[c];
    if (column.kind == ColumnKind::OneHot) {
      const std::string& value =
          column.group == kEthnicityGroup ? record.ethnicity : record.respondent;
      const bool hit = value == column.category;
      row[c] = hit ? 1.0 : 0.0;
      group_hit[column.group] = group_hit[column.group] || hit;
      continue;
    }
    const std::string& name = column.name;
    if (name.size() >= 2 && name[0] == 'A' && std::isdigit(static_cast<unsigned char>(name[1]))) {
      row[c] = record.items.at(static_cast<std::size_t>(std::stoi(name.substr(1))) - 1);
    } else if (name == "age_months") {
      row[c] = record.age_months;
    } else if (name == "sex_male") {
      row[c] = record.sex == Sex::Male ? 1.0 : 0.0;
    } else if (name == "jaundice") {
      row[c] = record.jaundice ? 1.0 : 0.0;
    } else if (name == "family_asd") {
      row[c] = record.family_asd ? 1.0 : 0.0;
    } else {
      throw SchemaMismatch("column '" + name + "' has no record field");
    }
  }
  if (warnings != nullptr) {
    for (const auto& [group, hit] : group_hit) {
      if (hit) continue;
      const std::string& value = group == kEthnicityGroup ? record.ethnicity : record.respondent;
      warnings->push_back("unknown " + group + " category '" + value +
                          "'; encoded as none of the training categories");
    }
  }
  return row;
}

FeatureMatrix encode(std::span<const ScreeningRecord> records) {
  if (records.empty()) throw ValidationError("cannot encode an empty record list");
  return encode(records, Schema::from_records(records));
}

FeatureMatrix encode(std::span<const ScreeningRecord> records, const Schema& schema,
                     std::vector<std::string>* warnings) {
  if (records.empty()) throw ValidationError("cannot encode an empty record list");
  FeatureMatrix matrix;
  matrix.schema = schema;
  matrix.values.reserve(records.size() * schema.size());
  matrix.labels.reserve(records.size());
  for (const auto& record : records) {
    validate(record);
    const auto row = encode_row(schema, record, warnings);
    matrix.values.insert(matrix.values.end(), row.begin(), row.end());
    matrix.labels.push_back(record.label);
  }
  return matrix;
}

std::size_t train_count(std::size_t n, double fraction) {
  // The epsilon keeps exact products such as 10 * 0.7 from rounding up a whole row.
  return static_cast<std::size_t>(std::ceil(static_cast<double>(n) * fraction - 1e-9));
}

SplitIndices split_indices(std::span<const Label> labels, const SplitSpec& spec) {
  const std::size_t n = labels.size();
  if (n < 2) throw ValidationError("split needs at least 2 rows");
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw ValidationError("train fraction must lie in (0, 1)");
  }
  Rng rng(spec.seed);
  SplitIndices out;
  std::vector<std::vector<std::size_t>> strata;
  if (spec.stratified) {
    strata.resize(2);
    for (std::size_t i = 0; i < n; ++i) strata[static_cast<int>(labels[i])].push_back(i);
    for (const auto& stratum : strata) {
      if (stratum.empty()) throw ValidationError("stratified split needs both classes present");
    }
  } else {
    strata.emplace_back(n);
    std::iota(strata[0].begin(), strata[0].end(), 0);
  }
  std::vector<std::size_t> take;
  for (auto& stratum : strata) {
    rng.shuffle(std::span<std::size_t>(stratum));
    take.push_back(std::min(train_count(stratum.size(), spec.train_fraction), stratum.size()));
  }
  std::size_t total = std::accumulate(take.begin(), take.end(), std::size_t{0});
  if (total == n) {
    // Keep one test row: drop it from the largest stratum.
    auto largest = std::max_element(take.begin(), take.end());
    --*largest;
  } else if (total == 0) {
    take[0] = 1;
  }
  for (std::size_t s = 0; s < strata.size(); ++s) {
    const auto& stratum = strata[s];
    out.train.insert(out.train.end(), stratum.begin(), stratum.begin() + take[s]);
    out.test.insert(out.test.end(), stratum.begin() + take[s], stratum.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

std::pair<FeatureMatrix, FeatureMatrix> split(const FeatureMatrix& matrix, const SplitSpec& spec) {
  const auto parts = split_indices(matrix.labels, spec);
  return {matrix.select(parts.train), matrix.select(parts.test)};
}

}  // namespace screenlab
