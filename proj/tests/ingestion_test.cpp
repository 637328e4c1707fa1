#include <chrono>
#include <fstream>
#include <sstream>
#include <thread>

#include <gtest/gtest.h>

#include "acp/csv.hpp"
#include "acp/ingestion.hpp"
#include "test_support.hpp"

namespace acp::ingest {
namespace {

using testing::Gen;

std::istringstream text(const std::string& s) { return std::istringstream(s); }

template <typename Fn>
std::string error_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

TEST(Csv, QuotingCrlfBomAndBlankLines) {
  const std::string input =
      "\xEF\xBB\xBF"
      "a,b\r\n\"Bocci, A.\",\"say \"\"hi\"\"\"\r\n\r\n\"multi\nline\",x\n";
  auto rows = csv::parse(input);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].fields, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(rows[1].fields, (std::vector<std::string>{"Bocci, A.", "say \"hi\""}));
  EXPECT_EQ(rows[1].line, 2u);
  EXPECT_EQ(rows[2].fields, (std::vector<std::string>{"multi\nline", "x"}));
  EXPECT_EQ(rows[2].line, 4u);
}

TEST(Csv, EmptyFieldsAndMissingFinalNewline) {
  auto rows = csv::parse("a,,c\n,,\nx,y,z");
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].fields, (std::vector<std::string>{"a", "", "c"}));
  EXPECT_EQ(rows[1].fields, (std::vector<std::string>{"", "", ""}));
  EXPECT_EQ(rows[2].fields, (std::vector<std::string>{"x", "y", "z"}));
}

TEST(Csv, UnterminatedQuoteIsAnError) {
  EXPECT_THROW((void)csv::parse("a\n\"open,b\n"), ParseError);
}

TEST(CsvProperty, EscapeRoundTrip) {
  Gen g(21);
  const std::string alphabet = "ab ,\"\n\r;x1.";
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<std::string> fields(static_cast<std::size_t>(g.integer(1, 6)));
    for (auto& f : fields) {
      const int len = g.integer(0, 8);
      for (int k = 0; k < len; ++k) f.push_back(alphabet[static_cast<std::size_t>(g.integer(0, 11))]);
    }
    if (fields.size() == 1 && fields[0].empty()) fields[0] = "z";
    std::ostringstream os;
    csv::write_row(os, fields);
    auto rows = csv::parse(os.str());
    ASSERT_EQ(rows.size(), 1u) << os.str();
    EXPECT_EQ(rows[0].fields, fields);
  }
}

TEST(LoadImpactTable, ParsesRow) {
  auto in = text("journal,year,indicator,value\nPhysical Review Letters,2009,SJR,5.264\n");
  auto t = load_impact_table(in);
  EXPECT_EQ(t.find(JournalRef("Physical Review Letters"), 2009, IndicatorName::sjr()), 5.264);
}

TEST(LoadImpactTable, HeaderOnlyIsEmpty) {
  auto in = text("journal,year,indicator,value\n");
  EXPECT_TRUE(load_impact_table(in).empty());
}

TEST(LoadImpactTable, DuplicateNamesBothLines) {
  auto in = text("journal,year,indicator,value\nJ,2009,SJR,1\nK,2009,SJR,1\nJ,2009,SJR,2\n");
  const auto msg = error_of([&] { (void)load_impact_table(in); });
  EXPECT_NE(msg.find("line 4"), std::string::npos) << msg;
  EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;
}

TEST(LoadImpactTable, MalformedRows) {
  for (const char* body : {"J,2009,SJR,-1\n", "J,20x9,SJR,1\n", "J,2009,SJR\n", "J,2009,SJR,abc\n",
                           ",2009,SJR,1\n", "J,2009,,1\n"}) {
    auto in = text(std::string("journal,year,indicator,value\n") + body);
    try {
      (void)load_impact_table(in);
      ADD_FAILURE() << "accepted: " << body;
    } catch (const Error& e) {
      EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
    }
  }
  auto bad_header = text("journal,year,value\n");
  EXPECT_THROW((void)load_impact_table(bad_header), ParseError);
}

TEST(LoadEvents, ParsesAndGroupsByAuthor) {
  auto in = text(
      "author_id,group,kind,journal,year,count\n"
      "bocci,Phy,publication,Physical Review Letters,2009,25\n"
      "alpha,,Citation,J,2010,2\n"
      "bocci,,REFERENCE,J,2008,1\n");
  auto cs = load_events(in);
  ASSERT_EQ(cs.size(), 2u);
  EXPECT_EQ(cs[0].author_id, "alpha");
  EXPECT_FALSE(cs[0].group);
  EXPECT_EQ(cs[1].group, "Phy");
  ASSERT_EQ(cs[1].events.size(), 2u);
  EXPECT_EQ(cs[1].events[0],
            Event(EventKind::kPublication, JournalRef("Physical Review Letters"), 2009, 25));
  EXPECT_EQ(cs[1].events[1].kind(), EventKind::kReference);
}

TEST(LoadEvents, RepeatedRowsMergeOnUse) {
  auto in = text("author_id,group,kind,journal,year,count\nx,G,publication,J,2010,2\nx,G,publication,J,2010,3\n");
  auto cs = load_events(in);
  auto totals = aggregate_events(cs[0].events);
  EXPECT_EQ((totals[{EventKind::kPublication, JournalRef("J"), 2010}]), 5);
}

TEST(LoadEvents, Errors) {
  const std::string header = "author_id,group,kind,journal,year,count\n";
  for (const char* body : {"x,G,publication,J,2010,0\n", "x,G,mention,J,2010,1\n",
                           "x,G,publication,J,2010,1\nx,H,citation,J,2010,1\n"}) {
    auto in = text(header + body);
    EXPECT_THROW((void)load_events(in), ParseError) << body;
  }
}

TEST(LoadScalars, ValidAndInvalid) {
  auto ok = text("author_id,papers,cites,h\nbocci,412,8780,42\nx,0,0,0\n");
  auto m = load_scalars(ok);
  EXPECT_EQ(m.at("bocci").papers, 412);
  EXPECT_EQ(m.at("bocci").cites, 8780);
  EXPECT_EQ(m.at("bocci").h, 42);
  EXPECT_EQ(m.at("x").h, 0);
  for (const char* body : {"x,10,50,12\n", "x,-1,0,0\n", "x,5,2,3\n", "x,1,1,1\nx,1,1,1\n"}) {
    auto in = text(std::string("author_id,papers,cites,h\n") + body);
    EXPECT_THROW((void)load_scalars(in), ParseError) << body;
  }
  // h <= cites only applies when there are papers; h <= papers still does.
  auto zero = text("author_id,papers,cites,h\nx,3,0,0\n");
  EXPECT_NO_THROW((void)load_scalars(zero));
}

TEST(LoadProfiles, FixtureShape) {
  const auto rows = testing::fixture_rows();
  ASSERT_EQ(rows.size(), 120u);
  const auto& bocci = rows[90];
  EXPECT_EQ(bocci.author_id, "Bocci, A.");
  EXPECT_EQ(bocci.group, "Phy");
  EXPECT_EQ(bocci.papers, 412);
  ASSERT_EQ(bocci.families.size(), 2u);
  EXPECT_EQ(bocci.families[1].family, IndicatorName::snip());
  EXPECT_EQ(bocci.families[0].p, 2.817);
}

TEST(LoadProfiles, RejectsBadHeaderAndDuplicates) {
  auto bad = text("author_id,group,papers,cites,h,p_sjr\n");
  EXPECT_THROW((void)load_profiles(bad), ParseError);
  auto dup = text(
      "author_id,group,papers,cites,h\n"
      "a,G,1,1,1\n"
      "a,G,1,1,1\n");
  EXPECT_THROW((void)load_profiles(dup), ParseError);
}

// Every format the library reads must survive write -> read unchanged.
TEST(RoundTrip, ProfilesCsvAndJson) {
  const auto rows = testing::fixture_rows();
  for (auto fmt : {Format::kCsv, Format::kJson}) {
    std::stringstream ss;
    write_profiles(ss, rows, fmt);
    EXPECT_EQ(load_profiles(ss, fmt), rows);
  }
  // The fixture file itself is reproduced byte for byte at 3 decimals.
  std::ostringstream os;
  write_profiles(os, rows, Format::kCsv, 3);
  EXPECT_EQ(os.str(), testing::read_file(testing::data_dir() / "profiles.csv"));
}

TEST(RoundTrip, ProfilesWithUndefinedCells) {
  Gen g(31);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<AuthorTableRow> rows;
    const int n = g.integer(0, 6);
    for (int k = 0; k < n; ++k) {
      AuthorTableRow r;
      r.author_id = "id \"" + std::to_string(k) + "\", x";
      if (g.coin()) r.group = "G" + std::to_string(g.integer(0, 2));
      if (g.coin()) r.papers = g.integer(0, 500);
      if (g.coin()) r.cites = g.integer(0, 9000);
      if (g.coin()) r.h = g.integer(0, 40);
      for (const auto& fam : {IndicatorName("SJR"), IndicatorName("X2")}) {
        FamilyColumns f;
        f.family = fam;
        for (std::size_t m = 0; m < 7; ++m) {
          if (g.coin(0.8)) measure_ref(f, m) = g.real(0, 10) * std::pow(10.0, g.integer(-8, 3));
        }
        r.families.push_back(f);
      }
      rows.push_back(std::move(r));
    }
    for (auto fmt : {Format::kCsv, Format::kJson}) {
      std::stringstream ss;
      write_profiles(ss, rows, fmt);
      auto back = load_profiles(ss, fmt);
      if (rows.empty()) {
        EXPECT_TRUE(back.empty());
      } else {
        EXPECT_EQ(back, rows);
      }
    }
  }
}

Dataset random_dataset(Gen& g) {
  Dataset d;
  d.window = YearWindow(2009, 2013);
  auto rc = testing::random_case(g, d.window);
  d.impact_tables = rc.table;
  const int authors = g.integer(1, 5);
  for (int a = 0; a < authors; ++a) {
    auto c = testing::random_case(g, d.window).corpus;
    c.author_id = "author, " + std::to_string(a);
    if (g.coin(0.7)) c.group = "Grp" + std::to_string(g.integer(0, 3));
    if (g.coin()) {
      const auto papers = publication_total(c, d.window);
      d.scalars[c.author_id] = {c.author_id, papers, papers * 3, std::min<std::int64_t>(papers, 4)};
    }
    d.corpora.push_back(std::move(c));
  }
  std::sort(d.corpora.begin(), d.corpora.end(),
            [](const auto& x, const auto& y) { return x.author_id < y.author_id; });
  return d;
}

TEST(RoundTrip, DatasetThroughCsvAndJson) {
  Gen g(41);
  for (int trial = 0; trial < 200; ++trial) {
    const auto d = random_dataset(g);
    for (auto fmt : {Format::kCsv, Format::kJson}) {
      std::stringstream impacts, events, scalars;
      write_impact_table(impacts, d.impact_tables, fmt);
      write_events(events, d.corpora, fmt);
      write_scalars(scalars, d.scalars);
      auto assembled = assemble_dataset(load_impact_table(impacts, fmt), load_events(events, fmt),
                                        load_scalars(scalars), d.window, ValidationMode::kFail);
      EXPECT_EQ(assembled.dataset, d);
      EXPECT_TRUE(assembled.warnings.empty());
    }
  }
}

TEST(RoundTrip, BocciFixtureFiles) {
  const auto dir = testing::data_dir() / "bocci";
  const auto impacts = testing::bocci_impacts();
  std::ostringstream os;
  write_impact_table(os, impacts);
  std::istringstream back(os.str());
  EXPECT_EQ(load_impact_table(back), impacts);

  std::ifstream sin(dir / "scalars.csv");
  const auto scalars = load_scalars(sin);
  std::stringstream ss;
  write_scalars(ss, scalars);
  EXPECT_EQ(load_scalars(ss), scalars);
}

TEST(AssembleDataset, ValidatesPublicationTotals) {
  auto corpora = testing::bocci_corpora();
  ScalarMap ok = {{"bocci", {"bocci", 412, 8780, 42}}};
  auto a = assemble_dataset(testing::bocci_impacts(), corpora, ok, YearWindow(2009, 2013),
                            ValidationMode::kFail);
  EXPECT_TRUE(a.warnings.empty());

  ScalarMap off = {{"bocci", {"bocci", 400, 8780, 42}}, {"ghost", {"ghost", 1, 1, 1}}};
  auto w = assemble_dataset(testing::bocci_impacts(), corpora, off, YearWindow(2009, 2013),
                            ValidationMode::kWarn);
  EXPECT_EQ(w.warnings.size(), 2u);
  EXPECT_THROW((void)assemble_dataset(testing::bocci_impacts(), corpora, off, YearWindow(2009, 2013),
                                      ValidationMode::kFail),
               Error);
}

FixtureClient recorded_client() {
  std::ifstream in(testing::data_dir() / "bocci" / "recorded.json");
  return FixtureClient(in);
}

RetryPolicy no_sleep(int attempts) {
  RetryPolicy p;
  p.max_attempts = attempts;
  p.sleep = nullptr;
  return p;
}

TEST(FixtureClient, FetchMatchesLoadEvents) {
  auto client = recorded_client();
  auto corpus = fetch_author_records(client, "bocci", YearWindow(2009, 2013), no_sleep(1));
  EXPECT_EQ(corpus, testing::bocci_corpora().front());
  EXPECT_EQ(publication_total(corpus, YearWindow(2009, 2013)), 412);
  EXPECT_EQ(fetch_author_records(client, "bocci", YearWindow(2009, 2013), no_sleep(1)), corpus);
}

TEST(FixtureClient, UnknownAuthorIsNotFoundAndNotRetried) {
  auto client = recorded_client();
  try {
    (void)fetch_author_records(client, "nobody", YearWindow(2009, 2013), no_sleep(5));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotFound);
  }
  EXPECT_EQ(client.calls("nobody"), 1);
}

TEST(FixtureClient, TransientFailuresRetriedWithBackoff) {
  auto client = recorded_client();
  client.inject_transient_failures("bocci", 2);
  std::vector<std::chrono::milliseconds> sleeps;
  RetryPolicy p;
  p.max_attempts = 3;
  p.initial_backoff = std::chrono::milliseconds(10);
  p.sleep = [&](std::chrono::milliseconds d) { sleeps.push_back(d); };
  auto corpus = fetch_author_records(client, "bocci", YearWindow(2009, 2013), p);
  EXPECT_EQ(corpus.author_id, "bocci");
  EXPECT_EQ(client.calls("bocci"), 3);
  EXPECT_EQ(sleeps, (std::vector<std::chrono::milliseconds>{std::chrono::milliseconds(10),
                                                            std::chrono::milliseconds(20)}));

  client.inject_transient_failures("bocci", 3);
  try {
    (void)fetch_author_records(client, "bocci", YearWindow(2009, 2013), no_sleep(3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTransport);
  }
}

TEST(FixtureClient, ConcurrentFetchesOfDistinctAuthors) {
  std::string json = R"({"authors": {)";
  for (int a = 0; a < 16; ++a) {
    json += (a ? "," : "") + std::string("\"a") + std::to_string(a) +
            R"(": {"group": "G", "records": [{"kind": "citation", "journal": "J", "year": 2010, "count": )" +
            std::to_string(a + 1) + "}]}";
  }
  json += "}}";
  std::istringstream in(json);
  FixtureClient client(in);
  std::vector<std::thread> threads;
  std::vector<AuthorCorpus> got(16);
  for (int a = 0; a < 16; ++a) {
    threads.emplace_back([&, a] {
      got[static_cast<std::size_t>(a)] =
          fetch_author_records(client, "a" + std::to_string(a), YearWindow(2009, 2013), no_sleep(1));
    });
  }
  for (auto& t : threads) t.join();
  for (int a = 0; a < 16; ++a) {
    EXPECT_EQ(got[static_cast<std::size_t>(a)].events.front().count(), a + 1);
    EXPECT_EQ(client.calls("a" + std::to_string(a)), 1);
  }
}

}  // namespace
}  // namespace acp::ingest
