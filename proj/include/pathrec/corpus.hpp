#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pathrec/registry.hpp"
#include "pathrec/rng.hpp"

namespace pathrec {

constexpr int64_t kSecondsPerDay = 86400;

// A raw (user, item, timestamp) event, keys still external strings.
struct Interaction {
  std::string user;
  std::string item;
  int64_t timestamp = 0;
};

// One user-day of interactions after filtering; length >= 2.
struct Session {
  EntityId user;
  std::vector<EntityId> items;
  int64_t day = 0;
};

// A session prefix plus up to T future targets from the user's stream.
// t_list[0] is always the ground-truth next item.
struct TrainInstance {
  std::vector<EntityId> prefix;
  std::vector<EntityId> t_list;
  EntityId user;
};

struct SessionReport {
  size_t n_events = 0;
  size_t n_items_dropped = 0;       // distinct items under the threshold
  size_t n_sessions_dropped = 0;    // user-days left with < 2 items
  size_t n_sessions = 0;
};

// Parses a 3-column TSV (user, item, timestamp). Input order is preserved.
inline std::vector<Interaction> load_interactions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open interactions file: " + path);
  std::vector<Interaction> events;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cols;
    size_t start = 0;
    while (true) {
      size_t tab = line.find('\t', start);
      if (tab == std::string::npos) {
        cols.push_back(line.substr(start));
        break;
      }
      cols.push_back(line.substr(start, tab - start));
      start = tab + 1;
    }
    if (cols.size() != 3) {
      throw std::runtime_error("malformed interaction at line " +
                               std::to_string(lineno) + ": expected 3 columns, got " +
                               std::to_string(cols.size()));
    }
    if (cols[0].empty() || cols[1].empty()) {
      throw std::runtime_error("empty id at line " + std::to_string(lineno));
    }
    Interaction ev;
    ev.user = cols[0];
    ev.item = cols[1];
    try {
      size_t pos = 0;
      ev.timestamp = std::stoll(cols[2], &pos);
      if (pos != cols[2].size()) throw std::invalid_argument("trailing chars");
    } catch (const std::exception&) {
      throw std::runtime_error("unparsable timestamp at line " +
                               std::to_string(lineno) + ": " + cols[2]);
    }
    if (ev.timestamp < 0) {
      throw std::runtime_error("negative timestamp at line " +
                               std::to_string(lineno));
    }
    events.push_back(std::move(ev));
  }
  return events;
}

// Groups events into user-day sessions, drops items below the global
// frequency threshold, then drops sessions shorter than 2. Each filter runs
// once, in that order. Users and products are registered as entities.
inline std::vector<Session> build_sessions(
    const std::vector<Interaction>& events, int min_item_count,
    EntityRegistry& registry, SessionReport* report = nullptr) {
  if (min_item_count < 1) {
    throw std::invalid_argument("min_item_count must be >= 1");
  }
  std::map<std::string, size_t> item_freq;
  for (const auto& ev : events) item_freq[ev.item]++;

  size_t items_dropped = 0;
  for (const auto& [item, n] : item_freq) {
    (void)item;
    if (n < static_cast<size_t>(min_item_count)) ++items_dropped;
  }

  // (user, day) -> events, keeping timestamp order with input order as the
  // tiebreak (stable sort below).
  struct Ev {
    std::string item;
    int64_t timestamp;
    size_t input_pos;
  };
  std::map<std::pair<std::string, int64_t>, std::vector<Ev>> buckets;
  size_t pos = 0;
  for (const auto& ev : events) {
    int64_t day = ev.timestamp / kSecondsPerDay;
    buckets[{ev.user, day}].push_back({ev.item, ev.timestamp, pos++});
  }

  std::vector<Session> sessions;
  size_t sessions_dropped = 0;
  for (auto& [key, evs] : buckets) {
    std::stable_sort(evs.begin(), evs.end(), [](const Ev& a, const Ev& b) {
      return a.timestamp < b.timestamp;
    });
    std::vector<std::string> kept;
    for (const auto& e : evs) {
      if (item_freq[e.item] >= static_cast<size_t>(min_item_count)) {
        kept.push_back(e.item);
      }
    }
    if (kept.size() < 2) {
      ++sessions_dropped;
      continue;
    }
    Session s;
    s.user = registry.get_or_create(EntityKind::user, key.first);
    s.day = key.second;
    for (const auto& item : kept) {
      s.items.push_back(registry.get_or_create(EntityKind::product, item));
    }
    sessions.push_back(std::move(s));
  }
  if (report) {
    report->n_events = events.size();
    report->n_items_dropped = items_dropped;
    report->n_sessions_dropped = sessions_dropped;
    report->n_sessions = sessions.size();
  }
  return sessions;
}

struct CorpusSplit {
  std::vector<Session> train;
  std::vector<Session> valid;
  std::vector<Session> test;
};

// Random 75/10/15 partition by session. Train and valid take the floor of
// their share; the leftover sessions go to test.
inline CorpusSplit split_corpus(const std::vector<Session>& sessions,
                                uint64_t seed) {
  if (sessions.size() < 4) {
    throw std::invalid_argument("need at least 4 sessions to split");
  }
  std::vector<size_t> order(sessions.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  size_t n = sessions.size();
  size_t n_train = n * 75 / 100;
  size_t n_valid = n * 10 / 100;

  CorpusSplit split;
  for (size_t i = 0; i < n; ++i) {
    const Session& s = sessions[order[i]];
    if (i < n_train) {
      split.train.push_back(s);
    } else if (i < n_train + n_valid) {
      split.valid.push_back(s);
    } else {
      split.test.push_back(s);
    }
  }
  return split;
}

// Per-user chronological item stream: sessions ordered by day (input order
// breaks day ties), items concatenated.
inline std::map<int32_t, std::vector<EntityId>> user_streams(
    const std::vector<Session>& sessions) {
  std::map<int32_t, std::vector<std::pair<int64_t, size_t>>> per_user;
  for (size_t i = 0; i < sessions.size(); ++i) {
    per_user[sessions[i].user.index].push_back({sessions[i].day, i});
  }
  std::map<int32_t, std::vector<EntityId>> streams;
  for (auto& [user, keys] : per_user) {
    std::stable_sort(keys.begin(), keys.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    auto& stream = streams[user];
    for (const auto& [day, idx] : keys) {
      (void)day;
      const auto& items = sessions[idx].items;
      stream.insert(stream.end(), items.begin(), items.end());
    }
  }
  return streams;
}

// Emits one instance per in-session position p (1 <= p < n): the prefix is
// items[0..p), targets are the next items of the user's stream (crossing
// session boundaries), truncated to T.
inline std::vector<TrainInstance> make_instances(
    const std::vector<Session>& sessions, int T) {
  if (T < 1) throw std::invalid_argument("T must be >= 1");
  auto streams = user_streams(sessions);

  // Session start offsets within each user stream, in the same order the
  // streams were concatenated.
  std::map<int32_t, std::vector<std::pair<int64_t, size_t>>> per_user;
  for (size_t i = 0; i < sessions.size(); ++i) {
    per_user[sessions[i].user.index].push_back({sessions[i].day, i});
  }
  std::vector<TrainInstance> out;
  for (auto& [user, keys] : per_user) {
    std::stable_sort(keys.begin(), keys.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    const auto& stream = streams[user];
    size_t offset = 0;
    for (const auto& [day, idx] : keys) {
      (void)day;
      const Session& s = sessions[idx];
      for (size_t p = 1; p < s.items.size(); ++p) {
        TrainInstance inst;
        inst.user = s.user;
        inst.prefix.assign(s.items.begin(), s.items.begin() + p);
        size_t start = offset + p;
        size_t end = std::min(stream.size(), start + static_cast<size_t>(T));
        inst.t_list.assign(stream.begin() + start, stream.begin() + end);
        out.push_back(std::move(inst));
      }
      offset += s.items.size();
    }
  }
  return out;
}

// --- JSON-lines persistence ---------------------------------------------

inline void write_sessions_jsonl(const std::string& path,
                                 const std::vector<Session>& sessions,
                                 const EntityRegistry& registry,
                                 const std::string& split_tag) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error("cannot write sessions file: " + path);
  for (const auto& s : sessions) {
    nlohmann::json j;
    j["user"] = registry.key_of(s.user.index);
    j["day"] = s.day;
    nlohmann::json items = nlohmann::json::array();
    for (const auto& it : s.items) items.push_back(registry.key_of(it.index));
    j["items"] = items;
    j["split"] = split_tag;
    out << j.dump() << "\n";
  }
}

inline void write_instances_jsonl(const std::string& path,
                                  const std::vector<TrainInstance>& instances,
                                  const EntityRegistry& registry) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write instances file: " + path);
  for (const auto& inst : instances) {
    nlohmann::json j;
    nlohmann::json prefix = nlohmann::json::array();
    for (const auto& it : inst.prefix) prefix.push_back(registry.key_of(it.index));
    nlohmann::json t_list = nlohmann::json::array();
    for (const auto& it : inst.t_list) t_list.push_back(registry.key_of(it.index));
    j["prefix"] = prefix;
    j["t_list"] = t_list;
    j["user"] = registry.key_of(inst.user.index);
    out << j.dump() << "\n";
  }
}

// Reads sessions back, grouped by their split tag. Unknown tags are an
// error; missing entities mean the file does not match the registry.
inline std::map<std::string, std::vector<Session>> read_sessions_jsonl(
    const std::string& path, const EntityRegistry& registry) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open sessions file: " + path);
  std::map<std::string, std::vector<Session>> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    std::string tag = j.at("split").get<std::string>();
    if (tag != "train" && tag != "valid" && tag != "test") {
      throw std::runtime_error("sessions line " + std::to_string(lineno) +
                               ": unknown split tag " + tag);
    }
    Session s;
    s.user = registry.find(EntityKind::user, j.at("user").get<std::string>());
    s.day = j.at("day").get<int64_t>();
    for (const auto& key : j.at("items")) {
      EntityId id = registry.find(EntityKind::product, key.get<std::string>());
      if (!id.valid()) {
        throw std::runtime_error("sessions line " + std::to_string(lineno) +
                                 " references unknown item: " +
                                 key.get<std::string>());
      }
      s.items.push_back(id);
    }
    if (!s.user.valid()) {
      throw std::runtime_error("sessions line " + std::to_string(lineno) +
                               " references unknown user");
    }
    out[tag].push_back(std::move(s));
  }
  return out;
}

inline std::vector<TrainInstance> read_instances_jsonl(
    const std::string& path, const EntityRegistry& registry) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open instances file: " + path);
  std::vector<TrainInstance> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    TrainInstance inst;
    auto resolve = [&](EntityKind kind, const std::string& key) {
      EntityId id = registry.find(kind, key);
      if (!id.valid()) {
        throw std::runtime_error("instances line " + std::to_string(lineno) +
                                 " references unknown entity: " + key);
      }
      return id;
    };
    for (const auto& key : j.at("prefix")) {
      inst.prefix.push_back(resolve(EntityKind::product, key.get<std::string>()));
    }
    for (const auto& key : j.at("t_list")) {
      inst.t_list.push_back(resolve(EntityKind::product, key.get<std::string>()));
    }
    inst.user = resolve(EntityKind::user, j.at("user").get<std::string>());
    out.push_back(std::move(inst));
  }
  return out;
}

}  // namespace pathrec
