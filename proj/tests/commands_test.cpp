#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <map>

#include <gtest/gtest.h>

#include "acp/commands.hpp"
#include "test_support.hpp"

namespace acp::cli {
namespace {

namespace fs = std::filesystem;
using testing::Gen;
using testing::read_file;
using testing::scratch_dir;

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream(p, std::ios::binary) << s;
}

// Runs the built binary through the shell; returns its exit status.
int run_cli(const std::string& args, const fs::path& log, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + "'" + ACP_CLI_PATH + "' " + args +
                          " >'" + log.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::string> tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = read_file(e.path());
  }
  return out;
}

// Several authors in four groups sharing one impact table.
ingest::Dataset random_dataset(std::uint64_t seed, int authors = 40) {
  Gen g(seed);
  ingest::Dataset d;
  const std::vector<std::string> groups = {"Chem", "Comp", "Med", "Phy"};
  for (int j = 0; j < 6; ++j) {
    for (int y = 2007; y <= 2014; ++y) {
      for (const auto& fam : {IndicatorName::sjr(), IndicatorName::snip()}) {
        if (g.coin(0.9)) d.impact_tables.add(JournalRef("J" + std::to_string(j)), y, fam, g.real(0.1, 6.0));
      }
    }
  }
  for (int a = 0; a < authors; ++a) {
    AuthorCorpus c;
    c.author_id = "author" + std::to_string(a);
    c.group = groups[a % groups.size()];
    for (const auto kind : kAllEventKinds) {
      for (int e = 0; e < 8; ++e) {
        c.events.emplace_back(kind, JournalRef("J" + std::to_string(g.integer(0, 5))),
                              g.integer(2009, 2013), g.integer(1, 40));
      }
    }
    d.corpora.push_back(std::move(c));
  }
  return d;
}

RunConfig write_inputs(const ingest::Dataset& d, const fs::path& dir) {
  std::ostringstream ev, im;
  ingest::write_events(ev, d.corpora);
  ingest::write_impact_table(im, d.impact_tables);
  write_text(dir / "events.csv", ev.str());
  write_text(dir / "impacts.csv", im.str());
  RunConfig cfg;
  cfg.events = dir / "events.csv";
  cfg.impacts = dir / "impacts.csv";
  cfg.out = dir / "out";
  return cfg;
}

TEST(Parsers, AcceptValidValues) {
  EXPECT_EQ(parse_window("2009:2013"), YearWindow(2009, 2013));
  EXPECT_TRUE(std::holds_alternative<StrictMissing>(parse_missing("strict")));
  EXPECT_EQ(std::get<NearestYear>(parse_missing("nearest:2")).max_distance, 2);
  EXPECT_EQ(parse_window_policy("open-references"), WindowPolicy::kOpenReferences);
  EXPECT_EQ(parse_format("text"), report::OutputFormat::kText);
  EXPECT_EQ(parse_method("spearman"), stats::CorrelationMethod::kSpearman);
}

TEST(Parsers, RejectWithInvalidArgument) {
  for (auto bad : {"2009", "2009:", "a:b", "2013:2009", "2009:2013x"}) {
    try {
      (void)parse_window(bad);
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kInvalidArgument) << bad;
    }
  }
  EXPECT_THROW((void)parse_missing("nearest:-1"), Error);
  EXPECT_THROW((void)parse_missing("nearest"), Error);
  EXPECT_THROW((void)parse_window_policy("open"), Error);
  EXPECT_THROW((void)parse_format("xml"), Error);
  EXPECT_THROW((void)parse_method("kendall"), Error);
}

TEST(Compute, BocciProfile) {
  const auto dir = scratch_dir("cmd_bocci");
  RunConfig cfg;
  cfg.events = testing::data_dir() / "bocci" / "events.csv";
  cfg.impacts = testing::data_dir() / "bocci" / "impact_table.csv";
  cfg.scalars = testing::data_dir() / "bocci" / "scalars.csv";
  cfg.out = dir;
  std::ostringstream log;
  ASSERT_EQ(run_command(cmd_compute, cfg, log), 0) << log.str();
  std::ifstream in(dir / "profiles.csv");
  const auto rows = ingest::load_profiles(in);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].author_id, "bocci");
  EXPECT_EQ(rows[0].h, 42);
  EXPECT_NEAR(*rows[0].families[0].p, 2.905, 0.001);
  ASSERT_EQ(rows[0].families.size(), 2u);
}

TEST(Compute, JsonInputsMatchCsv) {
  const auto dir = scratch_dir("cmd_json");
  const auto d = random_dataset(5, 8);
  auto cfg = write_inputs(d, dir);
  std::ostringstream ev, im, log;
  ingest::write_events(ev, d.corpora, ingest::Format::kJson);
  ingest::write_impact_table(im, d.impact_tables, ingest::Format::kJson);
  write_text(dir / "events.json", ev.str());
  write_text(dir / "impacts.json", im.str());
  ASSERT_EQ(run_command(cmd_compute, cfg, log), 0) << log.str();
  const auto from_csv = read_file(dir / "out" / "profiles.csv");
  cfg.events = dir / "events.json";
  cfg.impacts = dir / "impacts.json";
  ASSERT_EQ(run_command(cmd_compute, cfg, log), 0) << log.str();
  EXPECT_EQ(read_file(dir / "out" / "profiles.csv"), from_csv);
}

TEST(Compute, EmptyEventsExitsNoAuthorsWithoutOutput) {
  const auto dir = scratch_dir("cmd_empty");
  write_text(dir / "events.csv", "author_id,group,kind,journal,year,count\n");
  write_text(dir / "impacts.csv", "journal,year,indicator,value\nA,2010,SJR,1.0\n");
  RunConfig cfg;
  cfg.events = dir / "events.csv";
  cfg.impacts = dir / "impacts.csv";
  cfg.out = dir / "out";
  std::ostringstream log;
  EXPECT_EQ(run_command(cmd_compute, cfg, log), static_cast<int>(ErrorCode::kNoAuthors));
  EXPECT_FALSE(fs::exists(dir / "out"));
}

TEST(Compute, StrictPolicyNamesMissingKey) {
  const auto dir = scratch_dir("cmd_strict");
  write_text(dir / "events.csv",
             "author_id,group,kind,journal,year,count\n"
             "x,G,publication,A,2011,3\n"
             "x,G,publication,A,2012,2\n"
             "x,G,citation,A,2011,5\n");
  write_text(dir / "impacts.csv",
             "journal,year,indicator,value\nA,2011,SJR,1.5\n");
  RunConfig cfg;
  cfg.events = dir / "events.csv";
  cfg.impacts = dir / "impacts.csv";
  cfg.out = dir / "out";
  cfg.families = {IndicatorName::sjr()};
  cfg.missing = StrictMissing{};
  std::ostringstream log;
  EXPECT_EQ(run_command(cmd_compute, cfg, log), static_cast<int>(ErrorCode::kMissingImpact));
  EXPECT_NE(log.str().find("A, 2012"), std::string::npos) << log.str();

  // The default policy drops the gap and succeeds.
  cfg.missing = DropAndRenormalize{};
  std::ostringstream log2;
  EXPECT_EQ(run_command(cmd_compute, cfg, log2), 0) << log2.str();
}

TEST(Compute, MissingInputIsIoError) {
  RunConfig cfg;
  cfg.events = "/nonexistent/events.csv";
  cfg.impacts = "/nonexistent/impacts.csv";
  std::ostringstream log;
  EXPECT_EQ(run_command(cmd_compute, cfg, log), static_cast<int>(ErrorCode::kIo));
}

TEST(Summarize, SingleGroupWritesTable4Only) {
  const auto dir = scratch_dir("cmd_single");
  std::ostringstream os;
  ingest::write_profiles(os, report::rows_in_group(testing::fixture_rows(), "Phy"));
  write_text(dir / "phy.csv", os.str());
  RunConfig cfg;
  cfg.profiles = dir / "phy.csv";
  cfg.out = dir / "out";
  std::ostringstream log;
  ASSERT_EQ(run_command(cmd_summarize, cfg, log), 0) << log.str();
  EXPECT_NE(log.str().find("fewer than 2 groups"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "out" / "phy.table4.csv"));
  EXPECT_FALSE(fs::exists(dir / "out" / "phy.table5.csv"));
  EXPECT_FALSE(fs::exists(dir / "out" / "phy.variance.csv"));
}

TEST(Summarize, EmptyProfilesIsNoAuthors) {
  const auto dir = scratch_dir("cmd_noprof");
  std::ostringstream os;
  ingest::write_profiles(os, {});
  write_text(dir / "p.csv", os.str());
  RunConfig cfg;
  cfg.profiles = dir / "p.csv";
  cfg.out = dir;
  std::ostringstream log;
  EXPECT_EQ(run_command(cmd_summarize, cfg, log), static_cast<int>(ErrorCode::kNoAuthors));
}

// Files written by compute then summarize equal an in-memory pipeline.
TEST(Pipeline, ComputeThenSummarizeMatchesInMemory) {
  const auto dir = scratch_dir("cmd_compose");
  const auto d = random_dataset(11);
  auto cfg = write_inputs(d, dir);
  std::ostringstream log;
  ASSERT_EQ(run_command(cmd_compute, cfg, log), 0) << log.str();
  cfg.profiles = cfg.out / "profiles.csv";
  cfg.dataset = "r";
  ASSERT_EQ(run_command(cmd_summarize, cfg, log), 0) << log.str();

  const auto rows = compute_rows(d, cfg).rows;
  const auto agg = report::aggregate_report(rows, detail::measure_variables(rows));
  EXPECT_EQ(read_file(cfg.out / "r.table5.csv"),
            report::render_to_string(report::render_aggregate(agg), report::OutputFormat::kCsv));
  EXPECT_EQ(read_file(cfg.out / "r.variance.csv"),
            report::render_to_string(report::render_variance(agg), report::OutputFormat::kCsv));
}

int full_pipeline(RunConfig cfg, std::ostream& log) {
  if (int rc = run_command(cmd_compute, cfg, log)) return rc;
  cfg.profiles = cfg.out / "profiles.csv";
  cfg.dataset = "run";
  cfg.svg = true;
  if (int rc = run_command(cmd_summarize, cfg, log)) return rc;
  if (int rc = run_command(cmd_correlate, cfg, log)) return rc;
  cfg.method = stats::CorrelationMethod::kSpearman;
  if (int rc = run_command(cmd_correlate, cfg, log)) return rc;
  return run_command(cmd_report, cfg, log);
}

TEST(Pipeline, ByteIdenticalAcrossRunsAndThreadCounts) {
  const auto d = random_dataset(23, 60);
  std::map<std::string, std::string> first;
  for (unsigned threads : {1u, 1u, 4u}) {
    const auto dir = scratch_dir("cmd_det_" + std::to_string(threads));
    auto cfg = write_inputs(d, dir);
    cfg.threads = threads;
    std::ostringstream log;
    ASSERT_EQ(full_pipeline(cfg, log), 0) << log.str();
    const auto t = tree(cfg.out);
    EXPECT_GT(t.size(), 10u);
    if (first.empty()) {
      first = t;
    } else {
      EXPECT_TRUE(t == first) << "threads=" << threads;
    }
  }
}

TEST(Report, UnknownFigureIsInvalidArgument) {
  RunConfig cfg;
  cfg.profiles = testing::data_dir() / "profiles.csv";
  cfg.out = scratch_dir("cmd_fig");
  cfg.figures = {"pie"};
  std::ostringstream log;
  EXPECT_EQ(run_command(cmd_report, cfg, log), static_cast<int>(ErrorCode::kInvalidArgument));
}

TEST(Cli, InvalidMethodIsUsageError) {
  const auto dir = scratch_dir("cli_method");
  const auto profiles = (testing::data_dir() / "profiles.csv").string();
  EXPECT_EQ(run_cli("correlate --profiles '" + profiles + "' --method kendall --out '" + dir.string() + "'",
                    dir / "log"),
            2);
  EXPECT_TRUE(tree(dir).size() == 1u);  // only the log
}

TEST(Cli, ExitCodesForDataErrors) {
  const auto dir = scratch_dir("cli_codes");
  write_text(dir / "bad.csv", "author_id,group\nx\n");
  EXPECT_EQ(run_cli("summarize --profiles '" + (dir / "bad.csv").string() + "'", dir / "log"), 3);
  EXPECT_EQ(run_cli("summarize --profiles '" + (dir / "none.csv").string() + "'", dir / "log"), 7);
  EXPECT_EQ(run_cli("compute --events x.csv --impacts y.csv --window 2013:2009", dir / "log"), 2);
  EXPECT_EQ(run_cli("bogus", dir / "log"), 2);
}

TEST(Cli, ConfigFileAndEnvPrecedence) {
  const auto dir = scratch_dir("cli_config");
  const auto profiles = (testing::data_dir() / "profiles.csv").string();
  write_text(dir / "cfg.json", "{\"out\": \"" + (dir / "from_config").string() +
                                   "\", \"dataset\": \"cfg\", \"format\": \"json\"}");
  const std::string base = "summarize --profiles '" + profiles + "' --config '" + (dir / "cfg.json").string() + "'";

  // Config supplies out, dataset and format.
  ASSERT_EQ(run_cli(base, dir / "log"), 0) << read_file(dir / "log");
  EXPECT_TRUE(fs::exists(dir / "from_config" / "cfg.table4.json"));

  // Flags override the config file.
  ASSERT_EQ(run_cli(base + " --format csv --dataset flag", dir / "log"), 0);
  EXPECT_TRUE(fs::exists(dir / "from_config" / "flag.table4.csv"));

  // The environment only supplies a default output directory.
  const std::string env = "ACP_OUT_DIR='" + (dir / "from_env").string() + "'";
  ASSERT_EQ(run_cli("summarize --profiles '" + profiles + "'", dir / "log", env), 0);
  EXPECT_TRUE(fs::exists(dir / "from_env" / "profiles.table4.csv"));
  ASSERT_EQ(run_cli(base + " --dataset envcfg", dir / "log", env), 0);
  EXPECT_TRUE(fs::exists(dir / "from_config" / "envcfg.table4.json"));
  EXPECT_FALSE(fs::exists(dir / "from_env" / "envcfg.table4.json"));

  write_text(dir / "bad.json", "{\"colour\": \"red\"}");
  EXPECT_EQ(run_cli("summarize --profiles '" + profiles + "' --config '" + (dir / "bad.json").string() + "'",
                    dir / "log"),
            2);
}

}  // namespace
}  // namespace acp::cli
