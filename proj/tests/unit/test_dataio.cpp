#include <doctest.h>

#include <map>
#include <random>

#include "oracles.hpp"
#include "rhl/dataio.hpp"
#include "rhl/error.hpp"

using namespace rhl;
using rhl::testing::scratch_dir;
using rhl::testing::spit;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::InvalidArgument;
}

RawStudentRecord raw_student(std::string id) {
  RawStudentRecord r;
  r.student_id = std::move(id);
  r.origins = "OnSite";
  r.gender = "Male";
  r.highschool_type = "Scientific";
  r.income = "Medium";
  r.age_at_enrollment = 19;
  r.admission_score = 75.0;
  r.first_semester_credits = {12, 8};
  r.course_id = "C01-U1";
  r.school_id = "C01";
  return r;
}

}  // namespace

TEST_CASE("raw table with two events becomes three counting rows") {
  auto dir = scratch_dir("dataio_raw");
  spit(dir / "ev.csv", "cluster_id,unit_id,time\nA,a1,10\nA,a1,25\n");
  auto d = parse_event_table(dir / "ev.csv", {}, {0.0, 100.0});
  REQUIRE(d.rows.size() == 3);
  CHECK(d.to_original(d.rows[0].start) == 0.0);
  CHECK(d.to_original(d.rows[0].stop) == doctest::Approx(10.0).epsilon(1e-14));
  CHECK(d.rows[0].status == 1);
  CHECK(d.rows[0].event_count == 0);
  CHECK(d.to_original(d.rows[1].stop) == doctest::Approx(25.0).epsilon(1e-14));
  CHECK(d.rows[1].event_count == 1);
  CHECK(d.rows[2].stop == 1.0);
  CHECK(d.rows[2].status == 0);
  CHECK(d.rows[2].event_count == 2);
  CHECK(d.time_scale() == 100.0);
}

TEST_CASE("counting table with start >= stop is rejected") {
  auto dir = scratch_dir("dataio_nonchron");
  spit(dir / "ev.csv",
       "cluster_id,unit_id,start,stop,status,enum\nA,a1,0,0.5,1,0\nA,a1,0.5,0.5,0,1\n");
  CHECK(code_of([&] { parse_event_table(dir / "ev.csv", {}, {}); }) == ErrorCode::NonChronologicalRows);
  spit(dir / "ov.csv",
       "cluster_id,unit_id,start,stop,status,enum\nA,a1,0,0.5,1,0\nA,a1,0.4,1,0,1\n");
  CHECK(code_of([&] { parse_event_table(dir / "ov.csv", {}, {}); }) == ErrorCode::NonChronologicalRows);
}

TEST_CASE("counting format definition") {
  std::vector<UnitEvents> units{{"A", "a1", {0.2, 0.5}, {}, {}}, {"A", "a2", {}, {}, {}}};
  auto d = build_counting_format(units, {});
  REQUIRE(d.rows.size() == 4);
  struct R {
    double start, stop;
    int status, count;
  };
  std::vector<R> want{{0, 0.2, 1, 0}, {0.2, 0.5, 1, 1}, {0.5, 1, 0, 2}, {0, 1, 0, 0}};
  for (std::size_t i = 0; i < want.size(); ++i) {
    CHECK(d.rows[i].start == want[i].start);
    CHECK(d.rows[i].stop == want[i].stop);
    CHECK(d.rows[i].status == want[i].status);
    CHECK(d.rows[i].event_count == want[i].count);
  }
  CHECK(d.event_rows() == 2);
  CHECK(d.units().size() == 2);
}

TEST_CASE("dropout_count mark is multiplicity over enrollment") {
  std::vector<UnitEvents> units{{"A", "a1", {0.3, 0.6}, {3.0, 1.0}, 150.0}};
  auto d = build_counting_format(units, {});
  auto m = d.column("dropout_count");
  REQUIRE(m.has_value());
  CHECK(d.value(d.rows[0], *m) == 0.0);
  CHECK(d.value(d.rows[1], *m) == doctest::Approx(0.02).epsilon(1e-15));
  CHECK(d.value(d.rows[2], *m) == doctest::Approx(1.0 / 150.0).epsilon(1e-15));
  auto e = d.column("enum");
  REQUIRE(e.has_value());
  CHECK(d.value(d.rows[2], *e) == 2.0);
}

TEST_CASE("same-day events collapse into one jump") {
  auto dir = scratch_dir("dataio_collapse");
  spit(dir / "ev.csv", "cluster_id,unit_id,time,multiplicity,enrollment\nA,a1,5,1,100\nA,a1,5,2,100\nA,a1,7,1,100\n");
  auto d = parse_event_table(dir / "ev.csv", {}, {0.0, 10.0});
  REQUIRE(d.rows.size() == 3);
  CHECK(d.value(d.rows[1], *d.column("dropout_count")) == doctest::Approx(0.03));
}

TEST_CASE("ISO dates are read as days") {
  auto w = ObservationWindow::from_dates("2020-01-01", "2020-12-31");
  CHECK(w.length() == 365.0);
  CHECK(days_from_iso("1970-01-02") == 1.0);
  auto dir = scratch_dir("dataio_dates");
  spit(dir / "ev.csv", "cluster_id,unit_id,time\nA,a1,2020-07-01\n");
  auto d = parse_event_table(dir / "ev.csv", {}, w);
  CHECK(d.to_original(d.rows[0].stop) == doctest::Approx(days_from_iso("2020-07-01")).epsilon(1e-14));
  CHECK(code_of([] { days_from_iso("2020-02-30"); }) == ErrorCode::InvalidValue);
}

TEST_CASE("data errors carry their codes") {
  auto dir = scratch_dir("dataio_errors");
  spit(dir / "empty.csv", "");
  CHECK(code_of([&] { parse_event_table(dir / "empty.csv", {}, {}); }) == ErrorCode::EmptyDataset);
  spit(dir / "header.csv", "cluster_id,unit_id,time\n");
  CHECK(code_of([&] { parse_event_table(dir / "header.csv", {}, {}); }) == ErrorCode::EmptyDataset);
  spit(dir / "nocol.csv", "cluster,unit_id,time\nA,a,0.5\n");
  CHECK(code_of([&] { parse_event_table(dir / "nocol.csv", {}, {}); }) == ErrorCode::MissingColumn);
  spit(dir / "twice.csv", "cluster_id,unit_id,time\nA,a,0.5\nB,a,0.6\n");
  CHECK(code_of([&] { parse_event_table(dir / "twice.csv", {}, {}); }) == ErrorCode::UnitMismatch);
  spit(dir / "out.csv", "cluster_id,unit_id,time\nA,a,1.5\n");
  CHECK(code_of([&] { parse_event_table(dir / "out.csv", {}, {}); }) == ErrorCode::OutOfWindow);
  CHECK(code_of([&] { parse_event_table(dir / "missing.csv", {}, {}); }) == ErrorCode::IoError);
  std::vector<UnitEvents> dup{{"A", "a", {0.5, 0.5}, {}, {}}};
  CHECK(code_of([&] { build_counting_format(dup, {}); }) == ErrorCode::DuplicateEventTime);
  CHECK(code_of([&] { ObservationWindow{1.0, 1.0}.validate(); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("column remapping through the schema") {
  auto dir = scratch_dir("dataio_schema");
  spit(dir / "ev.csv", "school,course,day\nA,a1,0.5\n");
  EventSchema s;
  s.columns = {{"cluster_id", "school"}, {"unit_id", "course"}, {"time", "day"}};
  auto d = parse_event_table(dir / "ev.csv", s, {});
  CHECK(d.rows.size() == 2);
  CHECK(d.rows[0].cluster_id == "A");
}

TEST_CASE("counting table round-trips within 1e-12") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 365.0);
  std::vector<UnitEvents> units;
  for (int k = 0; k < 6; ++k) {
    UnitEvents e{"C" + std::to_string(k / 2), "U" + std::to_string(k), {}, {}, 40.0 + k};
    for (int j = 0; j < 5 + k; ++j) e.times.push_back(u(rng));
    std::sort(e.times.begin(), e.times.end());
    units.push_back(e);
  }
  const ObservationWindow w{0.0, 365.0};
  auto d = build_counting_format(units, w);
  auto dir = scratch_dir("dataio_roundtrip");
  write_counting_table(dir / "c.csv", d);
  auto back = parse_event_table(dir / "c.csv", {}, w);
  REQUIRE(back.rows.size() == d.rows.size());
  CHECK(back.mark_names == d.mark_names);
  for (std::size_t i = 0; i < d.rows.size(); ++i) {
    CHECK(back.rows[i].unit_id == d.rows[i].unit_id);
    CHECK(std::abs(back.rows[i].start - d.rows[i].start) <= 1e-12);
    CHECK(std::abs(back.rows[i].stop - d.rows[i].stop) <= 1e-12);
    CHECK(back.rows[i].status == d.rows[i].status);
    CHECK(back.rows[i].event_count == d.rows[i].event_count);
    CHECK(std::abs(back.rows[i].marks[0] - d.rows[i].marks[0]) <= 1e-12);
  }
  write_raw_events(dir / "r.csv", units);
  auto raw = parse_event_table(dir / "r.csv", {}, w);
  REQUIRE(raw.rows.size() == d.rows.size());
  for (std::size_t i = 0; i < d.rows.size(); ++i) {
    CHECK(std::abs(raw.rows[i].stop - d.rows[i].stop) <= 1e-12);
    CHECK(std::abs(raw.rows[i].marks[0] - d.rows[i].marks[0]) <= 1e-12);
  }
}

TEST_CASE("intervals partition the window and status rows match the final count") {
  auto d = rhl::testing::random_micro_dataset(11, 10, 2, 50);
  for (const auto& u : d.units()) {
    double len = 0.0;
    int events = 0;
    for (auto i = u.begin; i < u.end; ++i) {
      len += d.rows[i].stop - d.rows[i].start;
      events += d.rows[i].status;
    }
    CHECK(len == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(events == d.rows[u.end - 1].event_count);
  }
}

TEST_CASE("student covariates are derived from raw records") {
  auto a = raw_student("s1");
  auto b = raw_student("s2");
  b.age_at_enrollment = 20;
  auto c = raw_student("s3");
  c.age_at_enrollment.reset();
  c.birth_date = "2000-09-02";
  c.enrollment_date = "2020-09-01";
  std::vector<RawStudentRecord> raw{a, b, c};
  auto d = derive_student_covariates(raw);
  CHECK(d.records[0].level(Categorical::Age19) == 0);
  CHECK(d.records[1].level(Categorical::Age19) == 1);
  CHECK(age_in_years("2000-09-02", "2020-09-01") == 19);
  CHECK(d.records[2].level(Categorical::Age19) == 0);
  CHECK(d.records[0].ects1sem == 20);
  CHECK(d.reference_levels.at("income") == "Medium");
  auto bad = raw_student("s4");
  bad.income = "Unknown";
  std::vector<RawStudentRecord> one{bad};
  CHECK(code_of([&] { derive_student_covariates(one); }) == ErrorCode::UnknownCategoryLevel);
}

TEST_CASE("students csv round-trip") {
  auto r1 = raw_student("s1");
  auto r2 = raw_student("s2");
  r2.origins = "Offsite";
  r2.dropout3y = 1;
  std::vector<RawStudentRecord> raw{r1, r2};
  auto d = derive_student_covariates(raw);
  auto dir = scratch_dir("dataio_students");
  write_students_csv(dir / "s.csv", d);
  auto back = parse_students_csv(dir / "s.csv");
  REQUIRE(back.records.size() == 2);
  CHECK(back.records[1].levels == d.records[1].levels);
  CHECK(back.records[1].dropout3y == 1);
  CHECK(back.records[0].admission_score == 75.0);
  CHECK(back.records[0].course_id == "C01-U1");
}

TEST_CASE("descriptive summaries") {
  auto r1 = raw_student("s1");
  r1.first_semester_credits = {50};
  auto r2 = raw_student("s2");
  r2.first_semester_credits = {10};
  r2.dropout3y = 1;
  std::vector<RawStudentRecord> raw{r1, r2};
  auto t = summarize(derive_student_covariates(raw));
  const auto& ects = t.numeric[1];
  CHECK(ects.name == "ects1sem");
  CHECK(*ects.groups[0].mean == 50.0);
  CHECK(*ects.groups[1].mean == 10.0);
  CHECK(*ects.groups[0].sd == 0.0);

  std::vector<RawStudentRecord> same{r1, raw_student("s3")};
  auto t1 = summarize(derive_student_covariates(same));
  CHECK(t1.group_sizes[1] == 0);
  CHECK_FALSE(t1.numeric[0].groups[1].mean.has_value());
  CHECK(t1.categorical[0].percent[1].empty());
}

TEST_CASE("summary counts match a brute-force tally") {
  std::mt19937_64 rng(5);
  std::vector<RawStudentRecord> raw;
  const char* origins[] = {"OnSite", "Commuter", "Offsite"};
  const char* income[] = {"Medium", "Grant", "High", "Low"};
  for (int i = 0; i < 100; ++i) {
    auto r = raw_student("s" + std::to_string(i));
    r.origins = origins[rng() % 3];
    r.income = income[rng() % 4];
    r.dropout3y = static_cast<int>(rng() % 2);
    raw.push_back(r);
  }
  auto t = summarize(derive_student_covariates(raw));
  std::map<std::tuple<int, std::string>, std::size_t> tally;
  for (const auto& r : raw) ++tally[{r.dropout3y, r.origins}];
  for (int g = 0; g < 2; ++g)
    for (int l = 0; l < 3; ++l) CHECK(t.categorical[0].counts[g][l] == tally[{g, origins[l]}]);
  CHECK(t.group_sizes[0] + t.group_sizes[1] == 100);
}
