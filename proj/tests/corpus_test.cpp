#include "pathrec/corpus.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

namespace pathrec {
namespace {

namespace fs = std::filesystem;

class CorpusTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / "pathrec_corpus_test";
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write_file(const std::string& name, const std::string& body) {
    std::string path = (dir_ / name).string();
    std::ofstream out(path);
    out << body;
    return path;
  }

  fs::path dir_;
};

TEST_F(CorpusTest, LoadInteractionsParsesColumns) {
  auto path = write_file("i.tsv", "u1\tp1\t100\nu2\tp2\t86500\n");
  auto events = load_interactions(path);
  ASSERT_EQ(events.size(), 2u);
  EXPECT_EQ(events[0].user, "u1");
  EXPECT_EQ(events[0].item, "p1");
  EXPECT_EQ(events[0].timestamp, 100);
  EXPECT_EQ(events[1].timestamp, 86500);
}

TEST_F(CorpusTest, LoadInteractionsRejectsMalformedRows) {
  EXPECT_THROW(load_interactions(write_file("a.tsv", "u1\tp1\n")),
               std::runtime_error);
  EXPECT_THROW(load_interactions(write_file("b.tsv", "u1\tp1\tabc\n")),
               std::runtime_error);
  EXPECT_THROW(load_interactions(write_file("c.tsv", "u1\tp1\t-5\n")),
               std::runtime_error);
  EXPECT_THROW(load_interactions(write_file("d.tsv", "\tp1\t5\n")),
               std::runtime_error);
  EXPECT_THROW(load_interactions((dir_ / "absent.tsv").string()),
               std::runtime_error);
}

TEST_F(CorpusTest, BuildSessionsGroupsByUserDay) {
  std::vector<Interaction> events = {
      {"u1", "a", 10},           // day 0
      {"u1", "b", 20},           // day 0
      {"u1", "c", kSecondsPerDay + 5},  // day 1
      {"u1", "d", kSecondsPerDay + 6},  // day 1
      {"u2", "a", 30},           // day 0
      {"u2", "b", 40},           // day 0
  };
  EntityRegistry reg;
  auto sessions = build_sessions(events, 1, reg);
  ASSERT_EQ(sessions.size(), 3u);
  // map ordering: (u1, day0), (u1, day1), (u2, day0)
  EXPECT_EQ(sessions[0].items.size(), 2u);
  EXPECT_EQ(reg.key_of(sessions[0].items[0].index), "a");
  EXPECT_EQ(reg.key_of(sessions[0].items[1].index), "b");
  EXPECT_EQ(sessions[1].day, 1);
  EXPECT_EQ(reg.key_of(sessions[1].items[0].index), "c");
  EXPECT_EQ(reg.kind_of(sessions[0].user.index), EntityKind::user);
}

TEST_F(CorpusTest, BuildSessionsOrdersByTimestampStably) {
  std::vector<Interaction> events = {
      {"u1", "late", 50},
      {"u1", "early", 10},
      {"u1", "tie_first", 30},
      {"u1", "tie_second", 30},
  };
  EntityRegistry reg;
  auto sessions = build_sessions(events, 1, reg);
  ASSERT_EQ(sessions.size(), 1u);
  std::vector<std::string> got;
  for (auto id : sessions[0].items) got.push_back(reg.key_of(id.index));
  EXPECT_EQ(got, (std::vector<std::string>{"early", "tie_first", "tie_second",
                                           "late"}));
}

TEST_F(CorpusTest, BuildSessionsFiltersRareItemsThenShortSessions) {
  // "x" appears once globally: dropped. That leaves u2's session with a
  // single item, so the whole session goes too.
  std::vector<Interaction> events = {
      {"u1", "a", 10}, {"u1", "b", 20}, {"u1", "a", kSecondsPerDay + 1},
      {"u1", "b", kSecondsPerDay + 2}, {"u2", "a", 30}, {"u2", "x", 40},
  };
  EntityRegistry reg;
  SessionReport report;
  auto sessions = build_sessions(events, 2, reg, &report);
  ASSERT_EQ(sessions.size(), 2u);
  for (const auto& s : sessions) {
    for (auto id : s.items) EXPECT_NE(reg.key_of(id.index), "x");
  }
  EXPECT_EQ(report.n_events, 6u);
  EXPECT_EQ(report.n_items_dropped, 1u);
  EXPECT_EQ(report.n_sessions_dropped, 1u);
  EXPECT_EQ(report.n_sessions, 2u);
  EXPECT_FALSE(reg.contains(EntityKind::product, "x"));
}

TEST_F(CorpusTest, BuildSessionsRejectsBadThreshold) {
  EntityRegistry reg;
  EXPECT_THROW(build_sessions({}, 0, reg), std::invalid_argument);
}

std::vector<Session> synth_sessions(int n, EntityRegistry& reg) {
  std::vector<Session> sessions;
  for (int i = 0; i < n; ++i) {
    Session s;
    s.user = reg.get_or_create(EntityKind::user, "u" + std::to_string(i % 7));
    s.day = i;
    s.items = {reg.get_or_create(EntityKind::product, "p" + std::to_string(i)),
               reg.get_or_create(EntityKind::product,
                                 "p" + std::to_string(i + 1))};
    sessions.push_back(std::move(s));
  }
  return sessions;
}

TEST_F(CorpusTest, SplitCorpusProportionsAndDeterminism) {
  EntityRegistry reg;
  auto sessions = synth_sessions(100, reg);
  auto split = split_corpus(sessions, 42);
  EXPECT_EQ(split.train.size(), 75u);
  EXPECT_EQ(split.valid.size(), 10u);
  EXPECT_EQ(split.test.size(), 15u);

  auto again = split_corpus(sessions, 42);
  ASSERT_EQ(again.train.size(), split.train.size());
  for (size_t i = 0; i < split.train.size(); ++i) {
    EXPECT_EQ(again.train[i].day, split.train[i].day);
  }
  auto other = split_corpus(sessions, 43);
  bool identical = true;
  for (size_t i = 0; i < split.train.size(); ++i) {
    if (other.train[i].day != split.train[i].day) identical = false;
  }
  EXPECT_FALSE(identical);
}

TEST_F(CorpusTest, SplitCorpusFloorsSmallCounts) {
  EntityRegistry reg;
  auto sessions = synth_sessions(7, reg);
  auto split = split_corpus(sessions, 0);
  // floor(7*.75)=5 train, floor(7*.10)=0 valid, remainder 2 test.
  EXPECT_EQ(split.train.size(), 5u);
  EXPECT_EQ(split.valid.size(), 0u);
  EXPECT_EQ(split.test.size(), 2u);

  auto tiny = synth_sessions(3, reg);
  EXPECT_THROW(split_corpus(tiny, 0), std::invalid_argument);
}

TEST_F(CorpusTest, UserStreamsConcatenateByDay) {
  EntityRegistry reg;
  EntityId u = reg.get_or_create(EntityKind::user, "u");
  auto p = [&](const std::string& k) {
    return reg.get_or_create(EntityKind::product, k);
  };
  std::vector<Session> sessions;
  sessions.push_back({u, {p("c"), p("d")}, 5});
  sessions.push_back({u, {p("a"), p("b")}, 1});
  auto streams = user_streams(sessions);
  ASSERT_EQ(streams.size(), 1u);
  const auto& stream = streams[u.index];
  ASSERT_EQ(stream.size(), 4u);
  EXPECT_EQ(reg.key_of(stream[0].index), "a");
  EXPECT_EQ(reg.key_of(stream[3].index), "d");
}

TEST_F(CorpusTest, MakeInstancesCrossesSessionBoundaries) {
  EntityRegistry reg;
  EntityId u = reg.get_or_create(EntityKind::user, "u");
  auto p = [&](const std::string& k) {
    return reg.get_or_create(EntityKind::product, k);
  };
  std::vector<Session> sessions;
  sessions.push_back({u, {p("a"), p("b"), p("c")}, 0});
  sessions.push_back({u, {p("d"), p("e")}, 1});
  auto instances = make_instances(sessions, 3);
  // session 1 yields prefixes [a], [a,b]; session 2 yields [d].
  ASSERT_EQ(instances.size(), 3u);

  auto keys = [&](const std::vector<EntityId>& v) {
    std::vector<std::string> out;
    for (auto id : v) out.push_back(reg.key_of(id.index));
    return out;
  };
  EXPECT_EQ(keys(instances[0].prefix), (std::vector<std::string>{"a"}));
  EXPECT_EQ(keys(instances[0].t_list),
            (std::vector<std::string>{"b", "c", "d"}));
  EXPECT_EQ(keys(instances[1].prefix), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(keys(instances[1].t_list),
            (std::vector<std::string>{"c", "d", "e"}));
  // Final in-session position: targets continue into the stream tail only.
  EXPECT_EQ(keys(instances[2].prefix), (std::vector<std::string>{"d"}));
  EXPECT_EQ(keys(instances[2].t_list), (std::vector<std::string>{"e"}));
  EXPECT_EQ(instances[0].user, u);
  EXPECT_THROW(make_instances(sessions, 0), std::invalid_argument);
}

TEST_F(CorpusTest, SessionsJsonlRoundTrip) {
  EntityRegistry reg;
  auto sessions = synth_sessions(6, reg);
  std::string path = (dir_ / "sessions.jsonl").string();
  std::vector<Session> head(sessions.begin(), sessions.begin() + 4);
  std::vector<Session> tail(sessions.begin() + 4, sessions.end());
  write_sessions_jsonl(path, head, reg, "train");
  write_sessions_jsonl(path, tail, reg, "test");

  auto by_tag = read_sessions_jsonl(path, reg);
  ASSERT_EQ(by_tag["train"].size(), 4u);
  ASSERT_EQ(by_tag["test"].size(), 2u);
  EXPECT_EQ(by_tag["train"][2].day, sessions[2].day);
  EXPECT_EQ(by_tag["train"][2].items[1], sessions[2].items[1]);

  EntityRegistry empty;
  EXPECT_THROW(read_sessions_jsonl(path, empty), std::runtime_error);
}

TEST_F(CorpusTest, InstancesJsonlRoundTrip) {
  EntityRegistry reg;
  EntityId u = reg.get_or_create(EntityKind::user, "u");
  auto p = [&](const std::string& k) {
    return reg.get_or_create(EntityKind::product, k);
  };
  std::vector<Session> sessions;
  sessions.push_back({u, {p("a"), p("b"), p("c")}, 0});
  auto instances = make_instances(sessions, 5);

  std::string path = (dir_ / "instances.jsonl").string();
  write_instances_jsonl(path, instances, reg);
  auto loaded = read_instances_jsonl(path, reg);
  ASSERT_EQ(loaded.size(), instances.size());
  for (size_t i = 0; i < loaded.size(); ++i) {
    EXPECT_EQ(loaded[i].prefix, instances[i].prefix);
    EXPECT_EQ(loaded[i].t_list, instances[i].t_list);
    EXPECT_EQ(loaded[i].user, instances[i].user);
  }
}

}  // namespace
}  // namespace pathrec
