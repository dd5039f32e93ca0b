#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace screenlab {

inline constexpr std::size_t kItemCount = 10;
/// Totals strictly above this flag ASD traits.
inline constexpr int kTraitThreshold = 3;

enum class LikertAnswer { Always, Usually, Sometimes, Rarely, Never };

/// Case-insensitive over the five answer words; anything else throws ValidationError.
LikertAnswer parse_likert(std::string_view text);
std::string_view to_string(LikertAnswer answer);

enum class Label { No = 0, Yes = 1 };
enum class Sex { Male, Female };

/// Accepts "yes"/"no" in any case; throws ValidationError otherwise. The
/// dataset's class column uses the same words.
Label parse_label(std::string_view text);
std::string_view to_string(Label label);
constexpr Label other(Label label) { return label == Label::Yes ? Label::No : Label::Yes; }

/// A model's call on one row. `score` is the positive (Yes) class score in [0, 1].
struct Prediction {
  Label label = Label::No;
  double score = 0.0;
};

/// Accepts "m", "f", "male", "female" in any case.
Sex parse_sex(std::string_view text);
std::string_view to_string(Sex sex);

/// Accepts "yes"/"no"/"y"/"n"/"true"/"false" in any case.
bool parse_yes_no(std::string_view text);

/// Binary score of one questionnaire answer. Items 1-9 score a concern for
/// Sometimes/Rarely/Never; item 10 scores a concern for Always/Usually/Sometimes.
/// `item_index` is 1-based; out of range throws ValidationError.
int score_item(int item_index, LikertAnswer answer);

/// Sum of the binary item scores. Throws ValidationError on a non-binary item.
int qchat_score(std::span<const int, kItemCount> items);

/// Yes iff score > 3. Throws ValidationError outside 0..10.
Label derive_label(int score);

/// One toddler's questionnaire plus demographics.
struct ScreeningRecord {
  std::array<int, kItemCount> items{};
  int age_months = 1;
  Sex sex = Sex::Male;
  std::string ethnicity;
  bool jaundice = false;
  bool family_asd = false;
  std::string respondent;
  int qchat_score = 0;
  Label label = Label::No;

  bool operator==(const ScreeningRecord&) const = default;
};

/// Builds a record whose score and label are derived from the items.
ScreeningRecord make_record(std::array<int, kItemCount> items, int age_months, Sex sex,
                            std::string ethnicity, bool jaundice, bool family_asd,
                            std::string respondent);

/// Throws ValidationError naming the first broken invariant.
void validate(const ScreeningRecord& record);

enum class ColumnKind { Binary, Numeric, OneHot };
std::string_view to_string(ColumnKind kind);
ColumnKind parse_column_kind(std::string_view text);

struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::Binary;
  std::string group;     // one-hot group name, empty otherwise
  std::string category;  // one-hot category value, empty otherwise

  bool operator==(const Column&) const = default;
};

/// One logical attribute as seen by C4.5: either a single column or a whole
/// one-hot group.
struct Attribute {
  std::string name;
  bool categorical = false;
  std::vector<std::size_t> columns;  // one entry unless categorical
};

/// Ordered column metadata shared by every matrix and model.
class Schema {
 public:
  Schema() = default;
  /// Throws ValidationError on duplicate names, a leaked score column, or a
  /// one-hot group whose members are not contiguous.
  explicit Schema(std::vector<Column> columns);

  /// Fixed order: A1..A10, age_months, sex_male, jaundice, family_asd, then
  /// ethnicity and respondent groups with categories sorted lexicographically.
  static Schema for_categories(std::vector<std::string> ethnicities,
                               std::vector<std::string> respondents);
  /// Schema derived from the categories observed in `records`.
  static Schema from_records(std::span<const ScreeningRecord> records);

  const std::vector<Column>& columns() const { return columns_; }
  std::size_t size() const { return columns_.size(); }
  const Column& operator[](std::size_t i) const { return columns_[i]; }
  std::optional<std::size_t> find(std::string_view name) const;
  const std::vector<Attribute>& attributes() const { return attributes_; }
  /// Attribute index owning column `column`.
  std::size_t attribute_of(std::size_t column) const { return column_attribute_[column]; }

  bool operator==(const Schema& other) const { return columns_ == other.columns_; }

 private:
  std::vector<Column> columns_;
  std::vector<Attribute> attributes_;
  std::vector<std::size_t> column_attribute_;
};

/// Throws SchemaMismatch naming the first column where `actual` departs from `expected`.
void require_same_schema(const Schema& expected, const Schema& actual);

/// Dense row-major predictor matrix plus labels.
struct FeatureMatrix {
  Schema schema;
  std::vector<double> values;
  std::vector<Label> labels;
  Label positive_class = Label::Yes;

  std::size_t rows() const { return labels.size(); }
  std::size_t cols() const { return schema.size(); }
  std::span<const double> row(std::size_t i) const {
    return {values.data() + i * cols(), cols()};
  }
  double at(std::size_t row, std::size_t col) const { return values[row * cols() + col]; }

  /// Rows `indices` (duplicates allowed) in the given order.
  FeatureMatrix select(std::span<const std::size_t> indices) const;
};

/// Encodes one record against `schema`. A category the schema has not seen
/// leaves its group all-zero and appends a message to `warnings`.
std::vector<double> encode_row(const Schema& schema, const ScreeningRecord& record,
                               std::vector<std::string>* warnings = nullptr);

/// Encodes with a schema derived from `records`. Throws ValidationError on empty input.
FeatureMatrix encode(std::span<const ScreeningRecord> records);
/// Encodes against a fixed schema, e.g. a test set against the training schema.
FeatureMatrix encode(std::span<const ScreeningRecord> records, const Schema& schema,
                     std::vector<std::string>* warnings = nullptr);

struct SplitSpec {
  double train_fraction = 0.7;
  std::uint64_t seed = kDefaultSplitSeed;
  bool stratified = true;

  static constexpr std::uint64_t kDefaultSplitSeed = 20210611;
};

/// Number of training rows taken from a group of `n` rows: ceil(n * fraction).
std::size_t train_count(std::size_t n, double fraction);

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Row partition behind `split`. Both parts are sorted ascending.
SplitIndices split_indices(std::span<const Label> labels, const SplitSpec& spec);

/// Disjoint train/test partition, deterministic given the seed. Stratified
/// splits take ceil(n_class * fraction) training rows from each class.
std::pair<FeatureMatrix, FeatureMatrix> split(const FeatureMatrix& matrix, const SplitSpec& spec);

}  // namespace screenlab
