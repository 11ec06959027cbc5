#include "rhl/dataio.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <tuple>
#include <utility>

#include <spdlog/spdlog.h>

#include "rhl/csv.hpp"
#include "rhl/error.hpp"

namespace rhl {

namespace {

constexpr double kTilingTol = 1e-9;

bool looks_like_iso_date(std::string_view s) {
  return s.size() == 10 && s[4] == '-' && s[7] == '-';
}

double parse_time(std::string_view field, std::string_view context) {
  field = csv::trim(field);
  if (looks_like_iso_date(field)) return days_from_iso(field);
  return csv::parse_double(field, context);
}

std::string where(std::string_view cluster, std::string_view unit) {
  return "unit '" + std::string(unit) + "' of cluster '" + std::string(cluster) + "'";
}

// Sorts rows by (cluster, unit, start).
void sort_rows(std::vector<RecurrentEventRow>& rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return std::tie(a.cluster_id, a.unit_id, a.start) < std::tie(b.cluster_id, b.unit_id, b.start);
  });
}

}  // namespace

// ---------------------------------------------------------------------------

void ObservationWindow::validate() const {
  if (!(std::isfinite(t0) && std::isfinite(t1) && t0 < t1))
    fail(ErrorCode::InvalidArgument, "observation window needs finite t0 < t1");
}

double days_from_iso(std::string_view date) {
  date = csv::trim(date);
  if (!looks_like_iso_date(date))
    fail(ErrorCode::InvalidValue, "expected YYYY-MM-DD date, got '" + std::string(date) + "'");
  const auto y = static_cast<int>(csv::parse_int(date.substr(0, 4), "year"));
  const auto m = static_cast<unsigned>(csv::parse_int(date.substr(5, 2), "month"));
  const auto d = static_cast<unsigned>(csv::parse_int(date.substr(8, 2), "day"));
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                        std::chrono::day{d}};
  if (!ymd.ok()) fail(ErrorCode::InvalidValue, "invalid calendar date '" + std::string(date) + "'");
  return static_cast<double>(std::chrono::sys_days{ymd}.time_since_epoch().count());
}

ObservationWindow ObservationWindow::from_dates(std::string_view first, std::string_view last) {
  ObservationWindow w{days_from_iso(first), days_from_iso(last)};
  w.validate();
  return w;
}

// ---------------------------------------------------------------------------

std::vector<UnitRange> RecurrentEventDataset::units() const {
  std::vector<UnitRange> out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (out.empty() || out.back().unit_id != r.unit_id || out.back().cluster_id != r.cluster_id) {
      out.push_back({r.cluster_id, r.unit_id, i, i + 1});
    } else {
      out.back().end = i + 1;
    }
  }
  return out;
}

std::size_t RecurrentEventDataset::event_rows() const {
  return static_cast<std::size_t>(
      std::count_if(rows.begin(), rows.end(), [](const auto& r) { return r.status == 1; }));
}

std::optional<ColumnRef> RecurrentEventDataset::column(std::string_view name) const {
  if (name == kEventCountColumn) return ColumnRef{ColumnRef::Kind::EventCount, 0};
  for (std::size_t i = 0; i < mark_names.size(); ++i)
    if (mark_names[i] == name) return ColumnRef{ColumnRef::Kind::Mark, i};
  for (std::size_t i = 0; i < covariate_names.size(); ++i)
    if (covariate_names[i] == name) return ColumnRef{ColumnRef::Kind::Covariate, i};
  return std::nullopt;
}

double RecurrentEventDataset::value(const RecurrentEventRow& row, ColumnRef ref) const {
  switch (ref.kind) {
    case ColumnRef::Kind::EventCount: return static_cast<double>(row.event_count);
    case ColumnRef::Kind::Mark: return row.marks[ref.index];
    case ColumnRef::Kind::Covariate: return row.covariates[ref.index];
  }
  return 0.0;
}

void RecurrentEventDataset::validate() const {
  window.validate();
  if (rows.empty()) fail(ErrorCode::EmptyDataset, "dataset has no rows");
  std::map<std::string, std::string> cluster_of;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& u : units()) {
    if (!seen.emplace(u.cluster_id, u.unit_id).second)
      fail(ErrorCode::NonChronologicalRows, where(u.cluster_id, u.unit_id) + " rows are not contiguous");
    auto [it, inserted] = cluster_of.emplace(u.unit_id, u.cluster_id);
    if (!inserted && it->second != u.cluster_id)
      fail(ErrorCode::UnitMismatch, "unit '" + u.unit_id + "' appears in clusters '" + it->second +
                                        "' and '" + u.cluster_id + "'");
    double expected_start = 0.0;
    int expected_count = 0;
    for (std::size_t i = u.begin; i < u.end; ++i) {
      const auto& r = rows[i];
      if (!(r.start < r.stop))
        fail(ErrorCode::NonChronologicalRows, where(u.cluster_id, u.unit_id) + ": start >= stop");
      if (r.start != expected_start)
        fail(ErrorCode::NonChronologicalRows,
             where(u.cluster_id, u.unit_id) + ": rows do not tile the window");
      if (r.status != 0 && r.status != 1)
        fail(ErrorCode::InvalidValue, where(u.cluster_id, u.unit_id) + ": status must be 0 or 1");
      if (r.event_count != expected_count)
        fail(ErrorCode::NonChronologicalRows,
             where(u.cluster_id, u.unit_id) + ": enum does not follow the event sequence");
      if (r.marks.size() != mark_names.size() || r.covariates.size() != covariate_names.size())
        fail(ErrorCode::MissingColumn, where(u.cluster_id, u.unit_id) + ": column count mismatch");
      expected_start = r.stop;
      expected_count += r.status;
    }
    if (expected_start != 1.0)
      fail(ErrorCode::NonChronologicalRows,
           where(u.cluster_id, u.unit_id) + ": rows do not reach the end of the window");
  }
}

// ---------------------------------------------------------------------------

RecurrentEventDataset build_counting_format(std::span<const UnitEvents> units,
                                            const ObservationWindow& window) {
  window.validate();
  if (units.empty()) fail(ErrorCode::EmptyDataset, "no units supplied");

  RecurrentEventDataset data;
  data.window = window;
  data.mark_names = {std::string(kDropoutCountMark)};

  const double len = window.length();
  bool missing_enrollment = false;
  for (const auto& u : units) {
    if (!u.multiplicity.empty() && u.multiplicity.size() != u.times.size())
      fail(ErrorCode::InvalidArgument, where(u.cluster_id, u.unit_id) + ": multiplicity length mismatch");
    if (u.enrollment && !(*u.enrollment > 0.0))
      fail(ErrorCode::InvalidValue, where(u.cluster_id, u.unit_id) + ": enrollment must be positive");
    if (!u.enrollment && !u.times.empty()) missing_enrollment = true;

    std::vector<std::pair<double, double>> events;
    events.reserve(u.times.size());
    for (std::size_t k = 0; k < u.times.size(); ++k) {
      const double t = u.times[k];
      if (!(t > window.t0 && t < window.t1))
        fail(ErrorCode::OutOfWindow, where(u.cluster_id, u.unit_id) + ": event time " +
                                         csv::format_double(t) + " outside the open window");
      const double m = u.multiplicity.empty() ? 1.0 : u.multiplicity[k];
      if (!(m > 0.0)) fail(ErrorCode::InvalidValue, where(u.cluster_id, u.unit_id) + ": multiplicity must be positive");
      events.emplace_back((t - window.t0) / len, m);
    }
    std::stable_sort(events.begin(), events.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t k = 1; k < events.size(); ++k)
      if (!(events[k].first > events[k - 1].first))
        fail(ErrorCode::DuplicateEventTime,
             where(u.cluster_id, u.unit_id) + ": repeated event time; collapse same-day events first");

    const double scale = u.enrollment ? *u.enrollment : 1.0;
    double start = 0.0;
    double mark = 0.0;
    int count = 0;
    for (const auto& [t, m] : events) {
      data.rows.push_back({u.cluster_id, u.unit_id, start, t, 1, count, {mark}, {}});
      start = t;
      mark = m / scale;
      ++count;
    }
    data.rows.push_back({u.cluster_id, u.unit_id, start, 1.0, 0, count, {mark}, {}});
  }
  if (missing_enrollment)
    spdlog::info("enrollment counts missing for some units; dropout_count left unstandardized");

  sort_rows(data.rows);
  data.validate();
  return data;
}

// ---------------------------------------------------------------------------

std::string EventSchema::column(std::string_view canonical) const {
  auto it = columns.find(std::string(canonical));
  return it == columns.end() ? std::string(canonical) : it->second;
}

namespace {

RecurrentEventDataset parse_raw(const csv::Table& t, const EventSchema& schema,
                                const ObservationWindow& window) {
  const auto c_cluster = t.require(schema.column("cluster_id"));
  const auto c_unit = t.require(schema.column("unit_id"));
  const auto c_time = t.require(schema.column("time"));
  const auto c_mult = t.find(schema.column("multiplicity"));
  const auto c_enroll = t.find(schema.column("enrollment"));

  struct Accum {
    std::map<double, double> events;  // collapsed same-time multiplicities
    std::optional<double> enrollment;
  };
  std::map<std::pair<std::string, std::string>, Accum> acc;
  std::map<std::string, std::string> cluster_of;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::string context = "row " + std::to_string(r + 2);
    const std::string& cluster = row[c_cluster];
    const std::string& unit = row[c_unit];
    if (cluster.empty() || unit.empty()) fail(ErrorCode::InvalidValue, context + ": empty cluster/unit label");
    auto [it, inserted] = cluster_of.emplace(unit, cluster);
    if (!inserted && it->second != cluster)
      fail(ErrorCode::UnitMismatch, "unit '" + unit + "' appears in clusters '" + it->second +
                                        "' and '" + cluster + "'");
    auto& a = acc[{cluster, unit}];
    if (c_enroll && !row[*c_enroll].empty()) {
      const double e = csv::parse_double(row[*c_enroll], context);
      if (a.enrollment && *a.enrollment != e)
        fail(ErrorCode::InvalidValue, context + ": conflicting enrollment for " + where(cluster, unit));
      a.enrollment = e;
    }
    const std::string& time_field = row[c_time];
    if (time_field.empty() || time_field == "NA") continue;
    const double time = parse_time(time_field, context);
    const double mult = (c_mult && !row[*c_mult].empty()) ? csv::parse_double(row[*c_mult], context) : 1.0;
    a.events[time] += mult;
  }
  if (acc.empty()) fail(ErrorCode::EmptyDataset, "event table has no rows");

  std::vector<UnitEvents> units;
  units.reserve(acc.size());
  for (auto& [key, a] : acc) {
    UnitEvents u{key.first, key.second, {}, {}, a.enrollment};
    for (const auto& [time, mult] : a.events) {
      u.times.push_back(time);
      u.multiplicity.push_back(mult);
    }
    units.push_back(std::move(u));
  }
  return build_counting_format(units, window);
}

RecurrentEventDataset parse_counting(const csv::Table& t, const EventSchema& schema,
                                     const ObservationWindow& window) {
  const auto c_cluster = t.require(schema.column("cluster_id"));
  const auto c_unit = t.require(schema.column("unit_id"));
  const auto c_start = t.require(schema.column("start"));
  const auto c_stop = t.require(schema.column("stop"));
  const auto c_status = t.require(schema.column("status"));
  const auto c_enum = t.require(schema.column("enum"));
  if (t.rows.empty()) fail(ErrorCode::EmptyDataset, "event table has no rows");

  const std::set<std::size_t> fixed = {c_cluster, c_unit, c_start, c_stop, c_status, c_enum};
  std::vector<std::string> extra;
  for (std::size_t i = 0; i < t.header.size(); ++i)
    if (!fixed.contains(i)) extra.push_back(t.header[i]);

  RecurrentEventDataset data;
  data.window = window;
  if (!schema.mark_names.empty()) {
    data.mark_names = schema.mark_names;
  } else if (std::find(extra.begin(), extra.end(), kDropoutCountMark) != extra.end()) {
    data.mark_names = {std::string(kDropoutCountMark)};
  }
  if (!schema.covariate_names.empty()) {
    data.covariate_names = schema.covariate_names;
  } else {
    for (const auto& name : extra)
      if (std::find(data.mark_names.begin(), data.mark_names.end(), name) == data.mark_names.end())
        data.covariate_names.push_back(name);
  }
  std::vector<std::size_t> c_marks, c_covs;
  for (const auto& m : data.mark_names) c_marks.push_back(t.require(m));
  for (const auto& c : data.covariate_names) c_covs.push_back(t.require(c));

  const double len = window.length();
  data.rows.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::string context = "row " + std::to_string(r + 2);
    RecurrentEventRow e;
    e.cluster_id = row[c_cluster];
    e.unit_id = row[c_unit];
    e.start = (parse_time(row[c_start], context) - window.t0) / len;
    e.stop = (parse_time(row[c_stop], context) - window.t0) / len;
    e.status = static_cast<int>(csv::parse_int(row[c_status], context));
    e.event_count = static_cast<int>(csv::parse_int(row[c_enum], context));
    if (!(e.start < e.stop))
      fail(ErrorCode::NonChronologicalRows, context + ": start >= stop for " + where(e.cluster_id, e.unit_id));
    if (e.start < -kTilingTol || e.stop > 1.0 + kTilingTol)
      fail(ErrorCode::OutOfWindow, context + ": interval outside the observation window");
    for (auto c : c_marks) e.marks.push_back(csv::parse_double(row[c], context));
    for (auto c : c_covs) e.covariates.push_back(csv::parse_double(row[c], context));
    data.rows.push_back(std::move(e));
  }
  sort_rows(data.rows);

  // Snap boundaries that agree up to rounding so the tiling check is exact.
  for (const auto& u : data.units()) {
    auto& first = data.rows[u.begin];
    if (std::abs(first.start) <= kTilingTol) first.start = 0.0;
    for (std::size_t i = u.begin + 1; i < u.end; ++i) {
      auto& prev = data.rows[i - 1];
      auto& cur = data.rows[i];
      if (cur.start < prev.stop - kTilingTol)
        fail(ErrorCode::NonChronologicalRows, where(u.cluster_id, u.unit_id) + ": overlapping intervals");
      if (std::abs(cur.start - prev.stop) <= kTilingTol) cur.start = prev.stop;
    }
    auto& last = data.rows[u.end - 1];
    if (std::abs(last.stop - 1.0) <= kTilingTol) last.stop = 1.0;
  }
  data.validate();
  return data;
}

}  // namespace

RecurrentEventDataset parse_event_table(const std::filesystem::path& path,
                                        const EventSchema& schema,
                                        const ObservationWindow& window) {
  window.validate();
  const auto table = csv::read(path);
  if (table.header.empty()) fail(ErrorCode::EmptyDataset, "event table '" + path.string() + "' is empty");
  if (table.find(schema.column("start")) && table.find(schema.column("stop")))
    return parse_counting(table, schema, window);
  return parse_raw(table, schema, window);
}

void write_counting_table(const std::filesystem::path& path, const RecurrentEventDataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  out << "cluster_id,unit_id,start,stop,status,enum";
  for (const auto& m : data.mark_names) out << ',' << m;
  for (const auto& c : data.covariate_names) out << ',' << c;
  out << '\n';
  for (const auto& r : data.rows) {
    out << r.cluster_id << ',' << r.unit_id << ',' << csv::format_double(data.to_original(r.start)) << ','
        << csv::format_double(data.to_original(r.stop)) << ',' << r.status << ',' << r.event_count;
    for (double m : r.marks) out << ',' << csv::format_double(m);
    for (double c : r.covariates) out << ',' << csv::format_double(c);
    out << '\n';
  }
}

void write_raw_events(const std::filesystem::path& path, std::span<const UnitEvents> units) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  const bool with_enrollment =
      std::any_of(units.begin(), units.end(), [](const auto& u) { return u.enrollment.has_value(); });
  out << "cluster_id,unit_id,time,multiplicity" << (with_enrollment ? ",enrollment" : "") << '\n';
  for (const auto& u : units) {
    const std::string enrollment =
        with_enrollment ? "," + (u.enrollment ? csv::format_double(*u.enrollment) : std::string()) : "";
    if (u.times.empty()) {
      out << u.cluster_id << ',' << u.unit_id << ",," << enrollment << '\n';
      continue;
    }
    for (std::size_t k = 0; k < u.times.size(); ++k) {
      const double m = u.multiplicity.empty() ? 1.0 : u.multiplicity[k];
      out << u.cluster_id << ',' << u.unit_id << ',' << csv::format_double(u.times[k]) << ','
          << csv::format_double(m) << enrollment << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Students
// ---------------------------------------------------------------------------

std::span<const CategoricalSpec> categorical_specs() {
  static const std::array<CategoricalSpec, kCategoricalCount> specs = {{
      {"origins", {"OnSite", "Commuter", "Offsite"}},
      {"gender", {"Male", "Female"}},
      {"highschool_type", {"Scientific", "Classical", "Others", "Technical"}},
      {"income", {"Medium", "Grant", "High", "Low"}},
      {"age19", {"0", "1"}},
  }};
  return specs;
}

const CategoricalSpec& categorical_spec(Categorical field) {
  return categorical_specs()[static_cast<std::size_t>(field)];
}

std::map<std::string, std::string> default_reference_levels() {
  std::map<std::string, std::string> refs;
  for (const auto& s : categorical_specs()) refs.emplace(s.name, s.levels.front());
  return refs;
}

namespace {

int level_index(Categorical field, std::string_view value, std::string_view who) {
  const auto& spec = categorical_spec(field);
  for (std::size_t i = 0; i < spec.levels.size(); ++i)
    if (spec.levels[i] == value) return static_cast<int>(i);
  fail(ErrorCode::UnknownCategoryLevel, std::string(who) + ": '" + std::string(value) +
                                            "' is not a level of " + std::string(spec.name));
}

void check_student(const StudentRecord& s) {
  if (!(s.admission_score >= 60.0 && s.admission_score <= 100.0))
    fail(ErrorCode::InvalidValue, "student " + s.student_id + ": admission_score outside [60, 100]");
  if (s.ects1sem < 0) fail(ErrorCode::InvalidValue, "student " + s.student_id + ": negative ects1sem");
  if (s.dropout3y != 0 && s.dropout3y != 1)
    fail(ErrorCode::InvalidValue, "student " + s.student_id + ": dropout3y must be 0 or 1");
  if (s.course_id.empty() || s.school_id.empty())
    fail(ErrorCode::InvalidValue, "student " + s.student_id + ": missing course or school");
}

}  // namespace

int age_in_years(std::string_view birth_date, std::string_view on_date) {
  auto parts = [](std::string_view d) {
    days_from_iso(d);  // validates
    return std::tuple{csv::parse_int(d.substr(0, 4), "year"), csv::parse_int(d.substr(5, 2), "month"),
                      csv::parse_int(d.substr(8, 2), "day")};
  };
  const auto [by, bm, bd] = parts(csv::trim(birth_date));
  const auto [oy, om, od] = parts(csv::trim(on_date));
  long long age = oy - by;
  if (std::tie(om, od) < std::tie(bm, bd)) --age;
  return static_cast<int>(age);
}

PredictionDataset derive_student_covariates(std::span<const RawStudentRecord> raw) {
  PredictionDataset out;
  out.reference_levels = default_reference_levels();
  out.records.reserve(raw.size());
  for (const auto& r : raw) {
    const std::string who = "student " + r.student_id;
    StudentRecord s;
    s.student_id = r.student_id;
    s.levels[0] = level_index(Categorical::Origins, r.origins, who);
    s.levels[1] = level_index(Categorical::Gender, r.gender, who);
    s.levels[2] = level_index(Categorical::HighschoolType, r.highschool_type, who);
    s.levels[3] = level_index(Categorical::Income, r.income, who);

    int age = 0;
    if (r.birth_date && r.enrollment_date) {
      age = age_in_years(*r.birth_date, *r.enrollment_date);
    } else if (r.age_at_enrollment) {
      age = *r.age_at_enrollment;
    } else {
      fail(ErrorCode::InvalidValue, who + ": no birth/enrollment information to derive age19");
    }
    s.levels[4] = age > 19 ? 1 : 0;

    int credits = 0;
    for (int c : r.first_semester_credits) {
      if (c < 0) fail(ErrorCode::InvalidValue, who + ": negative exam credits");
      credits += c;
    }
    s.ects1sem = credits;
    s.admission_score = r.admission_score;
    s.career_start_ay = r.career_start_ay;
    s.course_id = r.course_id;
    s.school_id = r.school_id;
    s.dropout3y = r.dropout3y;
    check_student(s);
    out.records.push_back(std::move(s));
  }
  return out;
}

PredictionDataset parse_students_csv(const std::filesystem::path& path) {
  const auto t = csv::read(path);
  std::array<std::size_t, kStudentColumns.size()> col{};
  for (std::size_t i = 0; i < kStudentColumns.size(); ++i) col[i] = t.require(kStudentColumns[i]);
  if (t.rows.empty()) fail(ErrorCode::EmptyDataset, "students table '" + path.string() + "' has no rows");

  PredictionDataset out;
  out.reference_levels = default_reference_levels();
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::string context = "students row " + std::to_string(r + 2);
    StudentRecord s;
    s.student_id = row[col[0]];
    s.levels[0] = level_index(Categorical::Origins, row[col[1]], context);
    s.levels[1] = level_index(Categorical::Gender, row[col[2]], context);
    s.levels[2] = level_index(Categorical::HighschoolType, row[col[3]], context);
    s.levels[3] = level_index(Categorical::Income, row[col[4]], context);
    s.levels[4] = level_index(Categorical::Age19, row[col[5]], context);
    s.admission_score = csv::parse_double(row[col[6]], context);
    s.career_start_ay = static_cast<int>(csv::parse_int(row[col[7]], context));
    s.ects1sem = static_cast<int>(csv::parse_int(row[col[8]], context));
    s.course_id = row[col[9]];
    s.school_id = row[col[10]];
    s.dropout3y = static_cast<int>(csv::parse_int(row[col[11]], context));
    check_student(s);
    out.records.push_back(std::move(s));
  }
  return out;
}

void write_students_csv(const std::filesystem::path& path, const PredictionDataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  for (std::size_t i = 0; i < kStudentColumns.size(); ++i) out << (i ? "," : "") << kStudentColumns[i];
  out << '\n';
  auto lvl = [](const StudentRecord& s, Categorical c) {
    return categorical_spec(c).levels[static_cast<std::size_t>(s.level(c))];
  };
  for (const auto& s : data.records) {
    out << s.student_id << ',' << lvl(s, Categorical::Origins) << ',' << lvl(s, Categorical::Gender) << ','
        << lvl(s, Categorical::HighschoolType) << ',' << lvl(s, Categorical::Income) << ','
        << lvl(s, Categorical::Age19) << ',' << csv::format_double(s.admission_score) << ','
        << s.career_start_ay << ',' << s.ects1sem << ',' << s.course_id << ',' << s.school_id << ','
        << s.dropout3y << '\n';
  }
}

// ---------------------------------------------------------------------------

DescriptiveTable summarize(const PredictionDataset& data, std::string_view by) {
  if (by != "dropout3y") fail(ErrorCode::InvalidArgument, "summaries are grouped by dropout3y only");
  if (data.records.empty()) fail(ErrorCode::EmptyDataset, "cannot summarize an empty dataset");

  DescriptiveTable table;
  for (const auto& s : data.records) ++table.group_sizes[static_cast<std::size_t>(s.dropout3y)];

  auto numeric = [&](std::string name, auto get) {
    NumericSummary ns{std::move(name), {}};
    for (std::size_t g = 0; g < 2; ++g) {
      std::vector<double> xs;
      for (const auto& s : data.records)
        if (static_cast<std::size_t>(s.dropout3y) == g) xs.push_back(get(s));
      auto& stat = ns.groups[g];
      stat.n = xs.size();
      if (xs.empty()) continue;
      const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
      double ss = 0.0;
      for (double x : xs) ss += (x - mean) * (x - mean);
      stat.mean = mean;
      stat.sd = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1)) : 0.0;
    }
    table.numeric.push_back(std::move(ns));
  };
  numeric("admission_score", [](const StudentRecord& s) { return s.admission_score; });
  numeric("ects1sem", [](const StudentRecord& s) { return static_cast<double>(s.ects1sem); });

  for (std::size_t f = 0; f < kCategoricalCount; ++f) {
    const auto& spec = categorical_specs()[f];
    CategoricalSummary cs;
    cs.name = std::string(spec.name);
    for (auto l : spec.levels) cs.levels.emplace_back(l);
    for (std::size_t g = 0; g < 2; ++g) {
      cs.counts[g].assign(spec.levels.size(), 0);
      for (const auto& s : data.records)
        if (static_cast<std::size_t>(s.dropout3y) == g) ++cs.counts[g][static_cast<std::size_t>(s.levels[f])];
      if (table.group_sizes[g] == 0) continue;
      for (auto c : cs.counts[g])
        cs.percent[g].push_back(100.0 * static_cast<double>(c) / static_cast<double>(table.group_sizes[g]));
    }
    table.categorical.push_back(std::move(cs));
  }
  return table;
}

}  // namespace rhl
