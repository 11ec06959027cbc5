#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rhl {

// ---------------------------------------------------------------------------
// Recurrent-event data
// ---------------------------------------------------------------------------

/// Observation window S = [t0, t1] in original units (days or unitless).
struct ObservationWindow {
  double t0 = 0.0;
  double t1 = 1.0;

  double length() const noexcept { return t1 - t0; }
  void validate() const;

  /// Window from two ISO dates, expressed as days since 1970-01-01.
  static ObservationWindow from_dates(std::string_view first, std::string_view last);
};

/// Days since 1970-01-01 for a YYYY-MM-DD string.
double days_from_iso(std::string_view date);

/// One counting-process row covering (start, stop]. Times are rescaled to
/// [0, 1]. Marks and covariates carry the values known at `start`.
struct RecurrentEventRow {
  std::string cluster_id;
  std::string unit_id;
  double start = 0.0;
  double stop = 0.0;
  int status = 0;
  /// Distinct event days of the unit up to and including `start` (the
  /// `enum` column).
  int event_count = 0;
  std::vector<double> marks;
  std::vector<double> covariates;
};

/// Contiguous block of rows of one unit inside a dataset.
struct UnitRange {
  std::string cluster_id;
  std::string unit_id;
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Reference to one numeric column of the counting format.
struct ColumnRef {
  enum class Kind { EventCount, Mark, Covariate };
  Kind kind = Kind::EventCount;
  std::size_t index = 0;
};

inline constexpr std::string_view kEventCountColumn = "enum";
inline constexpr std::string_view kDropoutCountMark = "dropout_count";

struct RecurrentEventDataset {
  std::vector<RecurrentEventRow> rows;
  ObservationWindow window;
  std::vector<std::string> covariate_names;
  std::vector<std::string> mark_names;

  /// Original-unit length of one internal time unit.
  double time_scale() const noexcept { return window.length(); }
  double to_original(double t) const noexcept { return window.t0 + t * window.length(); }

  /// Units in row order, i.e. sorted by (cluster_id, unit_id).
  std::vector<UnitRange> units() const;
  std::size_t event_rows() const;

  std::optional<ColumnRef> column(std::string_view name) const;
  double value(const RecurrentEventRow& row, ColumnRef ref) const;

  /// Checks every documented invariant; throws on the first violation.
  void validate() const;
};

/// Event history of one unit in original time units.
struct UnitEvents {
  std::string cluster_id;
  std::string unit_id;
  std::vector<double> times;
  /// Event-day multiplicities; empty means one event per time.
  std::vector<double> multiplicity;
  std::optional<double> enrollment;
};

/// Builds the start/stop tiling of [t0, t1] for every unit. Adds the
/// `dropout_count` mark: multiplicity of the event opening the row, divided
/// by the unit's enrollment when supplied (0 on the first row).
RecurrentEventDataset build_counting_format(std::span<const UnitEvents> units,
                                            const ObservationWindow& window);

/// Column-name map for event tables. Keys are canonical names
/// (cluster_id, unit_id, time, multiplicity, enrollment, start, stop, status,
/// enum); values are the header names in the file. Missing keys map to
/// themselves.
struct EventSchema {
  std::map<std::string, std::string> columns;
  /// Counting format only: extra columns that are marks. When empty,
  /// `dropout_count` (if present) is the only mark.
  std::vector<std::string> mark_names;
  /// Counting format only: extra columns that are covariates. When empty,
  /// every remaining column is a covariate.
  std::vector<std::string> covariate_names;

  std::string column(std::string_view canonical) const;
};

/// Reads a raw (`time`) or counting-format (`start`/`stop`) event table.
/// Times may be plain reals or ISO dates (converted to days since t0).
RecurrentEventDataset parse_event_table(const std::filesystem::path& path,
                                        const EventSchema& schema,
                                        const ObservationWindow& window);

/// Writes the counting format in original time units.
void write_counting_table(const std::filesystem::path& path, const RecurrentEventDataset& data);

/// Writes the raw format `cluster_id,unit_id,time,multiplicity[,enrollment]`.
/// A unit without events is written as one row with an empty time.
void write_raw_events(const std::filesystem::path& path, std::span<const UnitEvents> units);

// ---------------------------------------------------------------------------
// Student-level data
// ---------------------------------------------------------------------------

enum class Categorical : std::size_t { Origins = 0, Gender, HighschoolType, Income, Age19 };
inline constexpr std::size_t kCategoricalCount = 5;

struct CategoricalSpec {
  std::string_view name;
  std::vector<std::string_view> levels;  // levels[0] is the reference
};

/// Categorical predictors in table order with their admissible levels.
std::span<const CategoricalSpec> categorical_specs();
const CategoricalSpec& categorical_spec(Categorical field);

struct StudentRecord {
  std::string student_id;
  std::array<int, kCategoricalCount> levels{};  // level index per Categorical
  double admission_score = 60.0;
  int ects1sem = 0;
  int career_start_ay = 0;
  std::string course_id;
  std::string school_id;
  int dropout3y = 0;

  int level(Categorical c) const { return levels[static_cast<std::size_t>(c)]; }
};

struct PredictionDataset {
  std::vector<StudentRecord> records;
  std::map<std::string, std::string> reference_levels;
};

std::map<std::string, std::string> default_reference_levels();

/// Pre-derivation student record as found in administrative extracts.
struct RawStudentRecord {
  std::string student_id;
  std::string origins;
  std::string gender;
  std::string highschool_type;
  std::string income;
  std::optional<std::string> birth_date;       // YYYY-MM-DD
  std::optional<std::string> enrollment_date;  // YYYY-MM-DD
  std::optional<int> age_at_enrollment;        // completed years, used when dates are absent
  double admission_score = 60.0;
  std::vector<int> first_semester_credits;
  int career_start_ay = 0;
  std::string course_id;
  std::string school_id;
  int dropout3y = 0;
};

/// Completed years between two ISO dates.
int age_in_years(std::string_view birth_date, std::string_view on_date);

PredictionDataset derive_student_covariates(std::span<const RawStudentRecord> raw);

/// Students CSV with the table variable names in lower snake case.
PredictionDataset parse_students_csv(const std::filesystem::path& path);
void write_students_csv(const std::filesystem::path& path, const PredictionDataset& data);
inline constexpr std::array<std::string_view, 12> kStudentColumns = {
    "student_id", "origins", "gender", "highschool_type", "income", "age19",
    "admission_score", "career_start_ay", "ects1sem", "course", "school", "dropout3y"};

struct GroupStat {
  std::size_t n = 0;
  std::optional<double> mean;
  std::optional<double> sd;
};

struct NumericSummary {
  std::string name;
  std::array<GroupStat, 2> groups;  // outcome 0, outcome 1
};

struct CategoricalSummary {
  std::string name;
  std::vector<std::string> levels;
  std::array<std::vector<std::size_t>, 2> counts;
  std::array<std::vector<double>, 2> percent;  // empty for an empty group
};

struct DescriptiveTable {
  std::array<std::size_t, 2> group_sizes{};
  std::vector<NumericSummary> numeric;
  std::vector<CategoricalSummary> categorical;
};

/// Per-outcome descriptive statistics (means/sd and counts/percentages).
DescriptiveTable summarize(const PredictionDataset& data, std::string_view by = "dropout3y");

}  // namespace rhl
