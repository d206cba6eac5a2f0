#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "pvdaq/state_file.hpp"

using namespace pvdaq;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("pvdaq_state_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

SessionState example_state(int variant = 0) {
  SessionState s;
  s.session_date = ms_from_civil(2025, 3, 10);
  s.csv_path = "/data/data_20250310.csv";
  s.rows_written = 415 + variant;
  s.rain_day_accum = 1.397 + variant;
  s.p0_energy_offset = -120.5;
  s.p1_energy_offset = -119.25;
  s.p0_last_energy = 90321.125 + variant;
  s.p1_last_energy = 91000.5;
  s.recording = true;
  s.last_write = ms_from_civil(2025, 3, 10, 11, 55, 0);
  return s;
}

bool states_equal(const SessionState& a, const SessionState& b) {
  return a.serialize() == b.serialize();
}

}  // namespace

TEST_CASE("state round trip", "[state]") {
  TempDir dir;
  const SessionState s = example_state();
  REQUIRE(write_state(dir.path, s).ok());

  const StateLoadResult r = load_state(dir.path);
  REQUIRE(r.kind == StateLoadKind::Loaded);
  CHECK(states_equal(r.state, s));
  CHECK(r.state.rows_written == 415);
  CHECK(r.state.recording);
  CHECK(r.state.session_date == ms_from_civil(2025, 3, 10));
}

TEST_CASE("missing state file is absent", "[state]") {
  TempDir dir;
  CHECK(load_state(dir.path).kind == StateLoadKind::Absent);
}

TEST_CASE("damaged state files are corrupt, not fatal", "[state]") {
  TempDir dir;

  SECTION("truncated file") {
    REQUIRE(write_state(dir.path, example_state()).ok());
    std::filesystem::resize_file(state_file_path(dir.path), 40);
    const auto r = load_state(dir.path);
    CHECK(r.kind == StateLoadKind::Corrupt);
    CHECK_FALSE(r.warning.empty());
  }
  SECTION("schema version drift") {
    std::ofstream out(state_file_path(dir.path));
    out << "schema_version = 99\n";
    CHECK(load_state(dir.path).kind == StateLoadKind::Corrupt);
  }
  SECTION("missing keys") {
    std::ofstream out(state_file_path(dir.path));
    out << "schema_version = 1\nsession_date = 2025-03-10\n";
    CHECK(load_state(dir.path).kind == StateLoadKind::Corrupt);
  }
  SECTION("unparsable values") {
    SessionState s = example_state();
    REQUIRE(write_state(dir.path, s).ok());
    std::string text;
    {
      std::ifstream in(state_file_path(dir.path));
      std::stringstream ss;
      ss << in.rdbuf();
      text = ss.str();
    }
    const auto pos = text.find("rows_written = 415");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 18, "rows_written = lot");
    std::ofstream out(state_file_path(dir.path));
    out << text;
    out.close();
    CHECK(load_state(dir.path).kind == StateLoadKind::Corrupt);
  }
  SECTION("junk line") {
    std::ofstream out(state_file_path(dir.path));
    out << "not a key value line\n";
    out.close();
    CHECK(load_state(dir.path).kind == StateLoadKind::Corrupt);
  }
}

TEST_CASE("crash at every write step leaves a complete state", "[state][crash]") {
  static constexpr StateWriteStep kSteps[] = {
      StateWriteStep::BeforeTmpWrite, StateWriteStep::AfterPartialWrite,
      StateWriteStep::AfterTmpWrite, StateWriteStep::AfterTmpSync,
      StateWriteStep::AfterRename,
  };

  for (StateWriteStep crash_at : kSteps) {
    TempDir dir;
    const SessionState old_state = example_state(0);
    const SessionState new_state = example_state(7);
    REQUIRE(write_state(dir.path, old_state).ok());

    const auto status = write_state(dir.path, new_state,
                                    [crash_at](StateWriteStep step) {
                                      return step != crash_at;  // die at the step
                                    });
    // the interrupted write reports failure unless it already renamed
    if (crash_at != StateWriteStep::AfterRename) CHECK_FALSE(status.ok());

    const StateLoadResult r = load_state(dir.path);
    REQUIRE(r.kind == StateLoadKind::Loaded);
    const bool is_old = states_equal(r.state, old_state);
    const bool is_new = states_equal(r.state, new_state);
    INFO("crash step " << static_cast<int>(crash_at));
    CHECK((is_old || is_new));
    // rename is the commit point
    if (crash_at == StateWriteStep::AfterRename) CHECK(is_new);
    else CHECK(is_old);
  }
}

TEST_CASE("leftover temp file never shadows the real state", "[state][crash]") {
  TempDir dir;
  REQUIRE(write_state(dir.path, example_state(0)).ok());
  // die mid-write: partial tmp remains on disk
  (void)write_state(dir.path, example_state(9), [](StateWriteStep step) {
    return step != StateWriteStep::AfterPartialWrite;
  });
  CHECK(std::filesystem::exists(state_file_path(dir.path).string() + ".tmp"));

  const auto r = load_state(dir.path);
  REQUIRE(r.kind == StateLoadKind::Loaded);
  CHECK(states_equal(r.state, example_state(0)));

  // the next full write replaces the junk tmp and commits
  REQUIRE(write_state(dir.path, example_state(3)).ok());
  CHECK(states_equal(load_state(dir.path).state, example_state(3)));
}
