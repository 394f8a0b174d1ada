#pragma once

// Wires KDC, RAN-side encryptor and RIC (database + xApp) over loopback TCP,
// either as threads of this process or as forked OS processes, and collects
// per-window timings.
//
//   KDC <-- hello -- RIC            RIC listens for E2 on an ephemeral port
//   KDC <-- hello -- RAN
//   KDC -- KEY_ISSUE(keys, model tail) --> RIC
//   KDC -- KEY_ISSUE(mpk, ric port)    --> RAN
//   RAN -- ENC_KPM --> RIC -> database -> xApp -- CONTROL / ACK(dropped) --> RAN

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <functional>
#include <iomanip>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ztric/errors.hpp"
#include "ztric/group.hpp"
#include "ztric/model_lab.hpp"
#include "ztric/pipeline/components.hpp"
#include "ztric/pipeline/database.hpp"
#include "ztric/pipeline/net.hpp"

namespace ztric::pipeline {

enum class RunMode { Threads, Processes };

struct ScenarioConfig {
  std::string group = "modp2048";
  std::string model_path;  // empty: train the canonical model for t on synthetic data
  std::size_t t = 10;
  std::size_t m = kKpmCount;
  double window_interval_ms = 0.0;  // 0: back to back
  double duration_s = 0.0;          // used when windows == 0
  std::size_t windows = 0;
  std::uint64_t seed = 42;
  RunMode mode = RunMode::Threads;
  std::string db_log;  // optional persistence log
  std::vector<std::uint64_t> corrupt_window_ids;
  int handshake_timeout_ms = 30000;
  int decision_timeout_ms = 120000;

  std::size_t window_count() const {
    if (windows) return windows;
    if (window_interval_ms > 0 && duration_s > 0)
      return static_cast<std::size_t>(duration_s * 1000.0 / window_interval_ms);
    return 0;
  }
};

inline ScenarioConfig scenario_from_json(const json& j) {
  try {
    ScenarioConfig c;
    c.group = j.value("group", c.group);
    c.model_path = j.value("model", std::string());
    c.t = j.value("t", c.t);
    c.m = j.value("m", c.m);
    c.window_interval_ms = j.value("window_interval_ms", c.window_interval_ms);
    c.duration_s = j.value("duration_s", c.duration_s);
    c.windows = j.value("windows", c.windows);
    c.seed = j.value("seed", c.seed);
    const std::string mode = j.value("mode", std::string("threads"));
    if (mode == "threads") c.mode = RunMode::Threads;
    else if (mode == "processes") c.mode = RunMode::Processes;
    else throw ParseError("scenario: mode must be 'threads' or 'processes'");
    c.db_log = j.value("db_log", std::string());
    c.corrupt_window_ids = j.value("corrupt_window_ids", std::vector<std::uint64_t>{});
    if (c.m != kKpmCount) throw ParseError("scenario: only m = 5 KPMs are supported");
    if (c.window_count() == 0) throw ParseError("scenario: set windows, or window_interval_ms and duration_s");
    return c;
  } catch (const json::exception& e) {
    throw ParseError(std::string("scenario: ") + e.what());
  }
}

inline json to_json(const ScenarioConfig& c) {
  return {{"group", c.group},
          {"model", c.model_path},
          {"t", c.t},
          {"m", c.m},
          {"window_interval_ms", c.window_interval_ms},
          {"duration_s", c.duration_s},
          {"windows", c.windows},
          {"seed", c.seed},
          {"mode", c.mode == RunMode::Threads ? "threads" : "processes"},
          {"db_log", c.db_log},
          {"corrupt_window_ids", c.corrupt_window_ids}};
}

// Durations in microseconds.
struct TimingRecord {
  std::uint64_t window_id = 0;
  std::int64_t encryption_time = 0;
  std::int64_t transport_time = 0;  // sent -> stored in the RIC database
  std::int64_t queue_time = 0;      // stored -> picked up by the xApp
  std::int64_t eval_time = 0;
  std::int64_t control_return_time = 0;
  std::int64_t rtt = 0;
};

struct RanReport {
  std::vector<TimingRecord> timings;
  std::vector<ControlDecision> decisions;
  std::vector<std::uint64_t> dropped;
  EncryptorStats encryptor;
  ReceivedMaterial received;
  std::string error;
};

struct RicReport {
  std::size_t stored = 0;
  XappStats xapp;
  ReceivedMaterial received;
  std::string error;
};

struct PipelineResult {
  std::vector<TimingRecord> timings;
  std::vector<ControlDecision> decisions;
  std::vector<std::uint64_t> dropped;
  std::size_t alarms = 0;
  std::size_t stored = 0;
  std::size_t encryptor_drops = 0;
  ReceivedMaterial ran_received;
  ReceivedMaterial ric_received;
  std::string mpk_fingerprint;
  std::vector<std::string> key_fingerprints;
  std::vector<DbRecord> db_records;  // threads mode only
  bool partial = false;
  std::vector<std::string> errors;
};

// Test/audit hooks.
struct PipelineHooks {
  WireTap tap;                                  // every frame on every channel (threads mode)
  std::function<void(const std::string&)> log;  // issuance and shutdown messages
};

using WindowSource = std::function<Dataset()>;
using ModelProvider = std::function<QuantizedModel()>;

// ---------------------------------------------------------------- report codecs (process mode)

inline json to_json(const TimingRecord& r) {
  return {r.window_id, r.encryption_time, r.transport_time, r.queue_time, r.eval_time, r.control_return_time, r.rtt};
}

inline TimingRecord timing_from_json(const json& j) {
  return {j.at(0).get<std::uint64_t>(), j.at(1).get<std::int64_t>(), j.at(2).get<std::int64_t>(),
          j.at(3).get<std::int64_t>(), j.at(4).get<std::int64_t>(), j.at(5).get<std::int64_t>(),
          j.at(6).get<std::int64_t>()};
}

inline json to_json(const ReceivedMaterial& r) {
  return {{"kinds", r.envelope_kinds}, {"first_layer_weights", r.first_layer_weights}};
}

inline ReceivedMaterial received_from_json(const json& j) {
  ReceivedMaterial r;
  r.envelope_kinds = j.at("kinds").get<std::set<std::string>>();
  r.first_layer_weights = j.at("first_layer_weights").get<bool>();
  return r;
}

inline json to_json(const RanReport& r) {
  json t = json::array(), d = json::array();
  for (const auto& x : r.timings) t.push_back(to_json(x));
  for (const auto& x : r.decisions) d.push_back({x.window_id, x.jammer_present, x.issued_at_us});
  return {{"timings", t},
          {"decisions", d},
          {"dropped", r.dropped},
          {"sent", r.encryptor.sent},
          {"enc_dropped", r.encryptor.dropped},
          {"received", to_json(r.received)},
          {"error", r.error}};
}

inline RanReport ran_report_from_json(const json& j) {
  RanReport r;
  for (const auto& x : j.at("timings")) r.timings.push_back(timing_from_json(x));
  for (const auto& x : j.at("decisions"))
    r.decisions.push_back({x.at(0).get<std::uint64_t>(), x.at(1).get<bool>(), x.at(2).get<std::int64_t>()});
  r.dropped = j.at("dropped").get<std::vector<std::uint64_t>>();
  r.encryptor = {j.at("sent").get<std::size_t>(), j.at("enc_dropped").get<std::size_t>()};
  r.received = received_from_json(j.at("received"));
  r.error = j.at("error").get<std::string>();
  return r;
}

inline json to_json(const RicReport& r) {
  return {{"stored", r.stored},
          {"decisions", r.xapp.decisions},
          {"alarms", r.xapp.alarms},
          {"received", to_json(r.received)},
          {"error", r.error}};
}

inline RicReport ric_report_from_json(const json& j) {
  RicReport r;
  r.stored = j.at("stored").get<std::size_t>();
  r.xapp = {j.at("decisions").get<std::size_t>(), j.at("alarms").get<std::size_t>()};
  r.received = received_from_json(j.at("received"));
  r.error = j.at("error").get<std::string>();
  return r;
}

// ---------------------------------------------------------------- components

namespace detail {

inline json expect_json_frame(FrameChannel& ch, MsgType type, int timeout_ms) {
  auto f = ch.recv(timeout_ms);
  if (!f) throw ProtocolError(ch.name() + ": peer closed during handshake");
  if (f->type != type)
    throw ProtocolError(ch.name() + ": expected " + to_string(type) + ", got " + to_string(f->type));
  try {
    return json::parse(f->payload);
  } catch (const json::exception& e) {
    throw ProtocolError(ch.name() + ": malformed payload: " + e.what());
  }
}

inline void send_json(FrameChannel& ch, MsgType type, std::uint64_t id, const json& j) {
  ch.send({type, id, j.dump()});
}

}  // namespace detail

inline RicReport run_ric(const ScenarioConfig& cfg, std::uint16_t kdc_port, RicDatabase& db, const WireTap& tap) {
  RicReport rep;
  try {
    Listener e2;
    FrameChannel kdc(connect_loopback(kdc_port), "ric<->kdc", tap);
    detail::send_json(kdc, MsgType::Ack, 0, {{"hello", "ric"}, {"e2_port", e2.port()}});
    const json issue = detail::expect_json_frame(kdc, MsgType::KeyIssue, cfg.handshake_timeout_ms);
    rep.received.absorb(issue);
    if (issue.contains("refused")) throw ValidationError(issue.at("refused").get<std::string>());
    XappBundle bundle = xapp_bundle_from_json(issue);
    EncryptedInferenceContext ctx(named_group(bundle.group), std::move(bundle.keys), std::move(bundle.model));
    detail::send_json(kdc, MsgType::Ack, 0, {{"received", "keys"}});

    FrameChannel ran(e2.accept(cfg.handshake_timeout_ms), "ric<->ran", tap);
    std::string reader_error;
    std::thread reader([&] {
      try {
        while (auto f = ran.recv()) {
          if (f->type != MsgType::EncKpm) throw ProtocolError("E2: unexpected " + std::string(to_string(f->type)));
          rep.received.absorb(json::parse(f->payload, nullptr, false));
          db.append(f->correlation_id, std::move(f->payload));
        }
      } catch (const std::exception& e) {
        reader_error = e.what();
      }
      db.close();
    });

    RicDatabase::Cursor cur;
    std::string send_error;
    rep.xapp = xapp_loop(db, cur, ctx, [&](const XappOutcome& o) {
      try {
        if (o.decision) detail::send_json(ran, MsgType::Control, o.window_id, control_payload(o));
        else detail::send_json(ran, MsgType::Ack, o.window_id, dropped_payload(o));
      } catch (const std::exception& e) {
        if (send_error.empty()) send_error = e.what();
      }
    });
    reader.join();
    ran.shutdown_send();
    rep.stored = db.size();
    if (!reader_error.empty()) rep.error = reader_error;
    else if (!send_error.empty()) rep.error = send_error;
  } catch (const std::exception& e) {
    rep.error = e.what();
    db.close();
  }
  return rep;
}

inline RanReport run_ran(const ScenarioConfig& cfg, std::uint16_t kdc_port, const WindowSource& source,
                         const WireTap& tap) {
  RanReport rep;
  try {
    Dataset windows = source();
    FrameChannel kdc(connect_loopback(kdc_port), "ran<->kdc", tap);
    detail::send_json(kdc, MsgType::Ack, 0, {{"hello", "ran"}});
    const json issue = detail::expect_json_frame(kdc, MsgType::KeyIssue, cfg.handshake_timeout_ms);
    rep.received.absorb(issue);
    if (issue.contains("refused")) throw ValidationError(issue.at("refused").get<std::string>());
    EncryptorBundle bundle = encryptor_bundle_from_json(issue);
    const auto ric_port = issue.at("ric_e2_port").get<std::uint16_t>();
    detail::send_json(kdc, MsgType::Ack, 0, {{"received", "keys"}});

    FrameChannel ric(connect_loopback(ric_port), "ran<->ric", tap);
    struct Pending {
      std::int64_t start_us, enc_us;
    };
    std::mutex mu;
    std::condition_variable cv;
    std::map<std::uint64_t, Pending> pending;
    std::size_t resolved = 0;
    std::size_t expected = 0;
    bool sending_done = false;
    std::string recv_error;

    std::thread receiver([&] {
      try {
        while (auto f = ric.recv()) {
          const std::int64_t received_at = now_us();
          const json j = json::parse(f->payload);
          std::lock_guard lock(mu);
          auto it = pending.find(f->correlation_id);
          if (it == pending.end()) throw ProtocolError("response for unknown window " + std::to_string(f->correlation_id));
          if (f->type == MsgType::Control) {
            TimingRecord r;
            r.window_id = f->correlation_id;
            r.encryption_time = it->second.enc_us;
            const auto sent = j.at("sent_at_us").get<std::int64_t>();
            const auto stored = j.at("stored_at_us").get<std::int64_t>();
            const auto picked = j.at("picked_at_us").get<std::int64_t>();
            const auto issued = j.at("issued_at_us").get<std::int64_t>();
            r.transport_time = stored - sent;
            r.queue_time = picked - stored;
            r.eval_time = j.at("eval_us").get<std::int64_t>();
            r.control_return_time = received_at - issued;
            r.rtt = received_at - it->second.start_us;
            rep.timings.push_back(r);
            rep.decisions.push_back({r.window_id, j.at("jammer_present").get<bool>(), issued});
          } else if (f->type == MsgType::Ack && j.value("status", "") == "dropped") {
            rep.dropped.push_back(f->correlation_id);
          } else {
            throw ProtocolError("unexpected " + std::string(to_string(f->type)) + " from RIC");
          }
          pending.erase(it);
          ++resolved;
          cv.notify_all();
        }
      } catch (const std::exception& e) {
        std::lock_guard lock(mu);
        recv_error = e.what();
      }
      std::lock_guard lock(mu);
      sending_done = true;  // nothing more will resolve
      cv.notify_all();
    });

    SeededEntropy rng(derive_seed(cfg.seed, 0xe7c));
    Encryptor<SeededEntropy> enc(bundle, rng);
    std::size_t next = 0;
    const auto t0 = std::chrono::steady_clock::now();
    const std::set<std::uint64_t> corrupt(cfg.corrupt_window_ids.begin(), cfg.corrupt_window_ids.end());
    auto pull = [&]() -> std::optional<KpmWindow> {
      if (next >= windows.size()) return std::nullopt;
      if (cfg.window_interval_ms > 0) {
        std::this_thread::sleep_until(t0 + std::chrono::microseconds(static_cast<std::int64_t>(
                                               cfg.window_interval_ms * 1000.0 * static_cast<double>(next))));
      }
      return std::move(windows[next++]);
    };
    rep.encryptor = encryptor_loop<SeededEntropy>(
        pull, enc,
        [&](EncryptedWindow&& w) {
          {
            std::lock_guard lock(mu);
            pending[w.window_id] = {w.start_us, w.enc_done_us - w.start_us};
            ++expected;
          }
          ric.send(w.frame);
        },
        [&](std::uint64_t id) { return corrupt.count(id) > 0; });

    {
      std::unique_lock lock(mu);
      const bool done = cv.wait_for(lock, std::chrono::milliseconds(cfg.decision_timeout_ms),
                                    [&] { return resolved == expected || sending_done; });
      if (!done) rep.error = "timed out waiting for " + std::to_string(expected - resolved) + " decisions";
    }
    ric.shutdown_send();
    receiver.join();
    if (rep.error.empty() && !recv_error.empty()) rep.error = recv_error;
    if (rep.error.empty() && resolved != expected)
      rep.error = std::to_string(expected - resolved) + " windows unresolved";
  } catch (const std::exception& e) {
    rep.error = e.what();
  }
  std::sort(rep.timings.begin(), rep.timings.end(), [](auto& a, auto& b) { return a.window_id < b.window_id; });
  std::sort(rep.decisions.begin(), rep.decisions.end(), [](auto& a, auto& b) { return a.window_id < b.window_id; });
  std::sort(rep.dropped.begin(), rep.dropped.end());
  return rep;
}

namespace detail {

struct KdcOutcome {
  std::string error;
  std::string mpk_fingerprint;
  std::vector<std::string> key_fingerprints;
};

// Accepts both parties, issues keys, waits for their acknowledgements.
inline KdcOutcome run_kdc(const ScenarioConfig& cfg, Listener& listener, const ModelProvider& model_provider,
                          const WireTap& tap, const PipelineHooks& hooks) {
  KdcOutcome out;
  std::unique_ptr<FrameChannel> ric, ran;
  std::uint16_t ric_port = 0;
  try {
    for (int i = 0; i < 2; ++i) {
      auto ch = std::make_unique<FrameChannel>(listener.accept(cfg.handshake_timeout_ms), "kdc", tap);
      const json hello = expect_json_frame(*ch, MsgType::Ack, cfg.handshake_timeout_ms);
      const std::string who = hello.value("hello", "");
      if (who == "ric" && !ric) {
        ric_port = hello.at("e2_port").get<std::uint16_t>();
        ric = std::move(ch);
      } else if (who == "ran" && !ran) {
        ran = std::move(ch);
      } else {
        throw ProtocolError("kdc: unexpected hello '" + who + "'");
      }
    }
    const QuantizedModel model = model_provider();
    OsEntropy entropy;
    KdcIssue issue;
    try {
      issue = kdc_issue(model, named_group(cfg.group), entropy);
    } catch (const IssuanceRefused& e) {
      send_json(*ric, MsgType::KeyIssue, 0, {{"refused", e.what()}});
      send_json(*ran, MsgType::KeyIssue, 0, {{"refused", e.what()}});
      throw;
    }
    if (hooks.log) {
      hooks.log("kdc: issued mpk " + issue.mpk_fingerprint + " and " + std::to_string(issue.key_fingerprints.size()) +
                " functional keys for group " + cfg.group);
    }
    out.mpk_fingerprint = issue.mpk_fingerprint;
    out.key_fingerprints = issue.key_fingerprints;
    send_json(*ric, MsgType::KeyIssue, 0, to_json(issue.xapp));
    json enc = to_json(issue.encryptor);
    enc["ric_e2_port"] = ric_port;
    send_json(*ran, MsgType::KeyIssue, 0, enc);
    expect_json_frame(*ric, MsgType::Ack, cfg.handshake_timeout_ms);
    expect_json_frame(*ran, MsgType::Ack, cfg.handshake_timeout_ms);
  } catch (const std::exception& e) {
    out.error = std::string("kdc: ") + e.what();
  }
  return out;
}

inline void write_all(int fd, const std::string& s) {
  std::size_t done = 0;
  while (done < s.size()) {
    ssize_t n = ::write(fd, s.data() + done, s.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      return;
    }
    done += static_cast<std::size_t>(n);
  }
}

inline std::string read_all(int fd) {
  std::string out;
  char buf[65536];
  for (;;) {
    ssize_t n = ::read(fd, buf, sizeof buf);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    out.append(buf, static_cast<std::size_t>(n));
  }
  return out;
}

// Runs `body` in a child process and returns (pid, read end of its report pipe).
inline std::pair<pid_t, Fd> spawn(const std::function<std::string()>& body) {
  int fds[2];
  if (::pipe2(fds, O_CLOEXEC) < 0) throw IoError(errno_text("pipe"));
  std::fflush(nullptr);
  pid_t pid = ::fork();
  if (pid < 0) throw IoError(errno_text("fork"));
  if (pid == 0) {
    ::close(fds[0]);
    std::string report;
    try {
      report = body();
    } catch (...) {
      report = "{}";
    }
    write_all(fds[1], report);
    ::close(fds[1]);
    ::_exit(0);
  }
  ::close(fds[1]);
  return {pid, Fd(fds[0])};
}

}  // namespace detail

// Runs one scenario end to end. In process mode the RIC and RAN children are
// forked before the model is loaded and before any key exists, so neither
// address space ever holds the master secret or first-layer weights.
inline PipelineResult run_pipeline(const ScenarioConfig& cfg, const ModelProvider& model_provider,
                                   const WindowSource& window_source, const PipelineHooks& hooks = {}) {
  PipelineResult res;
  Listener kdc_listener;
  const std::uint16_t kdc_port = kdc_listener.port();
  RanReport ran;
  RicReport ric;

  if (cfg.mode == RunMode::Threads) {
    std::optional<RicDatabase> db;
    if (cfg.db_log.empty()) db.emplace();
    else db.emplace(cfg.db_log);
    std::thread ric_thread([&] { ric = run_ric(cfg, kdc_port, *db, hooks.tap); });
    std::thread ran_thread([&] { ran = run_ran(cfg, kdc_port, window_source, hooks.tap); });
    auto kdc = detail::run_kdc(cfg, kdc_listener, model_provider, hooks.tap, hooks);
    ran_thread.join();
    ric_thread.join();
    if (!kdc.error.empty()) res.errors.push_back(kdc.error);
    res.mpk_fingerprint = kdc.mpk_fingerprint;
    res.key_fingerprints = kdc.key_fingerprints;
    res.db_records = db->snapshot();
  } else {
    auto [ric_pid, ric_pipe] = detail::spawn([&] {
      std::optional<RicDatabase> db;
      if (cfg.db_log.empty()) db.emplace();
      else db.emplace(cfg.db_log);
      return to_json(run_ric(cfg, kdc_port, *db, {})).dump();
    });
    auto [ran_pid, ran_pipe] = detail::spawn([&] { return to_json(run_ran(cfg, kdc_port, window_source, {})).dump(); });
    auto kdc = detail::run_kdc(cfg, kdc_listener, model_provider, {}, hooks);
    const std::string ran_text = detail::read_all(ran_pipe.get());
    const std::string ric_text = detail::read_all(ric_pipe.get());
    int status = 0;
    ::waitpid(ran_pid, &status, 0);
    ::waitpid(ric_pid, &status, 0);
    if (!kdc.error.empty()) res.errors.push_back(kdc.error);
    res.mpk_fingerprint = kdc.mpk_fingerprint;
    res.key_fingerprints = kdc.key_fingerprints;
    try {
      ran = ran_report_from_json(json::parse(ran_text));
    } catch (const std::exception& e) {
      ran.error = std::string("ran process report unreadable: ") + e.what();
    }
    try {
      ric = ric_report_from_json(json::parse(ric_text));
    } catch (const std::exception& e) {
      ric.error = std::string("ric process report unreadable: ") + e.what();
    }
  }

  if (!ran.error.empty()) res.errors.push_back("ran: " + ran.error);
  if (!ric.error.empty()) res.errors.push_back("ric: " + ric.error);
  res.partial = !res.errors.empty();
  res.timings = std::move(ran.timings);
  res.decisions = std::move(ran.decisions);
  res.dropped = std::move(ran.dropped);
  res.encryptor_drops = ran.encryptor.dropped;
  res.alarms = ric.xapp.alarms;
  res.stored = ric.stored;
  res.ran_received = std::move(ran.received);
  res.ric_received = std::move(ric.received);
  if (hooks.log && res.partial)
    for (const auto& e : res.errors) hooks.log("pipeline: " + e);
  return res;
}

// Synthetic windows for a scenario: seed and t fix the stream.
inline Dataset scenario_windows(const ScenarioConfig& cfg) {
  SynthConfig sc;
  sc.seed = derive_seed(cfg.seed, 0x57e4);
  sc.t = cfg.t;
  return generate_dataset(sc, cfg.window_count());
}

// ---------------------------------------------------------------- summaries

struct TimingSummary {
  std::size_t t = 0;
  std::size_t input_dim = 0;
  std::size_t windows = 0;
  std::size_t drops = 0;
  double encryption_s = 0, transport_s = 0, queue_s = 0, eval_s = 0, control_return_s = 0, rtt_s = 0;
};

inline TimingSummary summarize(std::size_t t, std::size_t input_dim, const PipelineResult& r) {
  TimingSummary s;
  s.t = t;
  s.input_dim = input_dim;
  s.windows = r.timings.size();
  s.drops = r.dropped.size() + r.encryptor_drops;
  if (r.timings.empty()) return s;
  for (const auto& x : r.timings) {
    s.encryption_s += static_cast<double>(x.encryption_time);
    s.transport_s += static_cast<double>(x.transport_time);
    s.queue_s += static_cast<double>(x.queue_time);
    s.eval_s += static_cast<double>(x.eval_time);
    s.control_return_s += static_cast<double>(x.control_return_time);
    s.rtt_s += static_cast<double>(x.rtt);
  }
  const double k = 1e-6 / static_cast<double>(r.timings.size());
  s.encryption_s *= k;
  s.transport_s *= k;
  s.queue_s *= k;
  s.eval_s *= k;
  s.control_return_s *= k;
  s.rtt_s *= k;
  return s;
}

inline constexpr const char* kSummaryCsvHeader =
    "time_windows,input_shape,encryption_time_s,model_evaluation_time_s,round_trip_time_s,"
    "transport_time_s,queue_time_s,control_return_time_s,windows,drops";

inline std::string summary_csv_row(const TimingSummary& s) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(6) << s.t << ",\"(" << s.input_dim << ",1)\"," << s.encryption_s << ','
     << s.eval_s << ',' << s.rtt_s << ',' << s.transport_s << ',' << s.queue_s << ',' << s.control_return_s << ','
     << s.windows << ',' << s.drops;
  return os.str();
}

inline void print_summary_table(std::ostream& os, const std::vector<TimingSummary>& rows) {
  os << std::left << std::setw(26) << "Time Windows (Input Shape)" << std::right << std::setw(17) << "Encryption Time"
     << std::setw(24) << "Model Evaluation Time" << std::setw(18) << "Round Trip Time" << std::setw(10) << "Windows"
     << '\n';
  for (const auto& s : rows) {
    std::ostringstream label;
    label << s.t << " (" << s.input_dim << ",1)";
    os << std::left << std::setw(26) << label.str() << std::right << std::fixed << std::setprecision(3)
       << std::setw(16) << s.encryption_s << 's' << std::setw(23) << s.eval_s << 's' << std::setw(17) << s.rtt_s
       << 's' << std::setw(10) << s.windows << '\n';
  }
}

inline std::string timings_csv(const std::vector<TimingRecord>& rs) {
  std::ostringstream os;
  os << "window_id,encryption_us,transport_us,queue_us,eval_us,control_return_us,rtt_us\n";
  for (const auto& r : rs)
    os << r.window_id << ',' << r.encryption_time << ',' << r.transport_time << ',' << r.queue_time << ','
       << r.eval_time << ',' << r.control_return_time << ',' << r.rtt << '\n';
  return os.str();
}

}  // namespace ztric::pipeline
