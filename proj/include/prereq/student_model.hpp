#pragma once

// Append-only student activity log and the per-session timing analysis
// derived from it.
//
// Log line (one per answered attempt):
//   record("<student>","<desired>","<question>",<attempt>,"<passed|not_passed>","<asked_at>","<answered_at>").
// Timestamps are ISO-8601 UTC with second precision.

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "prereq/concept_id.hpp"
#include "prereq/error.hpp"
#include "prereq/mas.hpp"
#include "prereq/question_bank.hpp"

namespace prereq {

using Timestamp = std::chrono::sys_seconds;
using StudentId = std::string;

inline std::string format_timestamp(Timestamp ts) {
  using namespace std::chrono;
  const auto day = floor<days>(ts);
  const year_month_day ymd{day};
  const hh_mm_ss hms{ts - day};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

inline Timestamp parse_timestamp(std::string_view text) {
  using namespace std::chrono;
  int y = 0;
  unsigned mo = 0, d = 0, h = 0, mi = 0, s = 0;
  int consumed = 0;
  const std::string str(text);
  if (std::sscanf(str.c_str(), "%4d-%2u-%2uT%2u:%2u:%2uZ%n", &y, &mo, &d, &h, &mi, &s, &consumed) != 6 ||
      static_cast<std::size_t>(consumed) != str.size() || str.size() != 20) {
    fail(ErrorCode::ParseError, "bad timestamp '" + str + "', expected YYYY-MM-DDTHH:MM:SSZ");
  }
  const year_month_day ymd{year{y}, month{mo}, day{d}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 59) fail(ErrorCode::ParseError, "bad timestamp '" + str + "'");
  return sys_days{ymd} + hours{h} + minutes{mi} + seconds{s};
}

struct StudentEvent {
  StudentId student;
  ConceptId desired;
  ConceptId question;
  int attempt = 1;
  AnswerVerdict outcome = AnswerVerdict::not_passed;
  Timestamp asked_at;
  Timestamp answered_at;

  friend bool operator==(const StudentEvent&, const StudentEvent&) = default;
};

inline void validate_event(const StudentEvent& e) {
  if (e.student.empty()) fail(ErrorCode::InvalidEvent, "student id is empty");
  for (char c : e.student) {
    if (static_cast<unsigned char>(c) < 0x20) fail(ErrorCode::InvalidEvent, "control character in student id");
  }
  if (e.attempt < 1) fail(ErrorCode::InvalidEvent, "attempt must be >= 1");
  if (e.answered_at < e.asked_at) {
    fail(ErrorCode::InvalidEvent, "answered_at " + format_timestamp(e.answered_at) +
                                      " precedes asked_at " + format_timestamp(e.asked_at));
  }
}

namespace detail {

inline std::string log_quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + '"';
}

}  // namespace detail

inline std::string format_event(const StudentEvent& e) {
  std::string out = "record(";
  out += detail::log_quote(e.student) + ',';
  out += detail::log_quote(e.desired.str()) + ',';
  out += detail::log_quote(e.question.str()) + ',';
  out += std::to_string(e.attempt) + ',';
  out += detail::log_quote(to_string(e.outcome)) + ',';
  out += detail::log_quote(format_timestamp(e.asked_at)) + ',';
  out += detail::log_quote(format_timestamp(e.answered_at)) + ").";
  return out;
}

inline StudentEvent parse_event(std::string_view line) {
  if (line.empty() || line.back() != '.') fail(ErrorCode::ParseError, "record must end with '.'");
  mas::Literal lit;
  try {
    lit = mas::parse_literal(line.substr(0, line.size() - 1));
  } catch (const Error& e) {
    fail(ErrorCode::ParseError, e.detail());
  }
  using K = mas::Term::Kind;
  const K shape[] = {K::string, K::string, K::string, K::number, K::string, K::string, K::string};
  if (lit.functor != "record" || lit.args.size() != std::size(shape) || !lit.source.empty()) {
    fail(ErrorCode::ParseError, "expected record/7");
  }
  for (std::size_t i = 0; i < lit.args.size(); ++i) {
    if (lit.args[i].kind != shape[i]) fail(ErrorCode::ParseError, "argument " + std::to_string(i + 1) + " has the wrong type");
  }
  const auto& outcome = lit.args[4].text;
  if (outcome != "passed" && outcome != "not_passed") fail(ErrorCode::ParseError, "bad outcome '" + outcome + "'");
  auto as_id = [](const std::string& s) {
    auto id = ConceptId::try_parse(s);
    if (!id) fail(ErrorCode::ParseError, "bad concept id '" + s + "'");
    return *id;
  };
  StudentEvent e{lit.args[0].text,
                 as_id(lit.args[1].text),
                 as_id(lit.args[2].text),
                 std::stoi(lit.args[3].text),
                 outcome == "passed" ? AnswerVerdict::passed : AnswerVerdict::not_passed,
                 parse_timestamp(lit.args[5].text),
                 parse_timestamp(lit.args[6].text)};
  try {
    validate_event(e);
  } catch (const Error& err) {
    fail(ErrorCode::ParseError, err.detail());
  }
  return e;
}

// File-backed history. Appends are serialized through one instance; every
// append is fsync'ed before record_event returns.
class EventLog {
 public:
  explicit EventLog(std::filesystem::path path) : path_(std::move(path)) {}

  const std::filesystem::path& path() const noexcept { return path_; }

  void record_event(const StudentEvent& event) {
    validate_event(event);
    const std::string line = format_event(event) + '\n';
    std::lock_guard lock(mutex_);
    const int fd = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd < 0) fail(ErrorCode::StorageError, "open " + path_.string() + ": " + std::strerror(errno));
    std::size_t written = 0;
    while (written < line.size()) {
      const ssize_t n = ::write(fd, line.data() + written, line.size() - written);
      if (n < 0) {
        if (errno == EINTR) continue;
        const int err = errno;
        ::close(fd);
        fail(ErrorCode::StorageError, "write " + path_.string() + ": " + std::strerror(err));
      }
      written += static_cast<std::size_t>(n);
    }
    if (::fsync(fd) != 0) {
      const int err = errno;
      ::close(fd);
      fail(ErrorCode::StorageError, "fsync " + path_.string() + ": " + std::strerror(err));
    }
    ::close(fd);
  }

  // All events in file order. A missing file is an empty history.
  std::vector<StudentEvent> load_all() const {
    std::string contents;
    {
      std::ifstream in(path_, std::ios::binary);
      if (!in) {
        if (!std::filesystem::exists(path_)) return {};
        fail(ErrorCode::StorageError, "cannot read " + path_.string());
      }
      contents.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    }
    std::vector<StudentEvent> events;
    std::istringstream lines(contents);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(lines, line)) {
      ++line_no;
      if (line.empty()) continue;
      try {
        events.push_back(parse_event(line));
      } catch (const Error& e) {
        fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": " + e.detail());
      }
    }
    return events;
  }

  std::vector<StudentEvent> load_history(const StudentId& student) const {
    auto events = load_all();
    std::erase_if(events, [&](const StudentEvent& e) { return e.student != student; });
    return events;
  }

 private:
  std::filesystem::path path_;
  std::mutex mutex_;
};

// Exact arithmetic mean of whole-second durations.
struct Mean {
  std::int64_t total = 0;
  std::int64_t count = 0;

  double seconds() const { return count == 0 ? 0.0 : static_cast<double>(total) / static_cast<double>(count); }

  // Nearest half second: "36", "148.5".
  std::string to_string() const {
    if (count == 0) return "0";
    const auto halves = static_cast<std::int64_t>(std::llround(2.0 * static_cast<double>(total) / static_cast<double>(count)));
    return std::to_string(halves / 2) + (halves % 2 ? ".5" : "");
  }

  friend bool operator==(const Mean&, const Mean&) = default;
};

struct AttemptRecord {
  int attempt = 1;
  Timestamp asked_at;
  Timestamp answered_at;
  std::int64_t duration = 0;  // seconds
  AnswerVerdict outcome = AnswerVerdict::not_passed;

  friend bool operator==(const AttemptRecord&, const AttemptRecord&) = default;
};

struct TaskAnalysis {
  ConceptId question;
  std::vector<AttemptRecord> attempts;
  std::vector<std::int64_t> attempt_durations;
  Mean average_duration;
  AnswerVerdict final_outcome = AnswerVerdict::not_passed;

  friend bool operator==(const TaskAnalysis&, const TaskAnalysis&) = default;
};

struct SessionSummary {
  StudentId student;
  ConceptId desired;
  std::vector<TaskAnalysis> tasks;
  std::int64_t total_duration = 0;
  bool prepared = false;
  std::vector<ConceptId> recommended;
  std::string remark;

  friend bool operator==(const SessionSummary&, const SessionSummary&) = default;
};

// "not prepared to learn update; recommended to learn delete_select; and delete_where"
inline std::string make_remark(const ConceptId& desired, bool prepared, const std::vector<ConceptId>& recommended) {
  if (prepared) return "prepared to learn " + desired.str();
  std::string out = "not prepared to learn " + desired.str();
  if (recommended.empty()) return out;
  out += "; recommended to learn ";
  for (std::size_t i = 0; i < recommended.size(); ++i) {
    if (i > 0) out += (i + 1 == recommended.size()) ? "; and " : "; ";
    out += recommended[i].str();
  }
  return out;
}

// Splits a chronological event list into sessions and computes per-task
// timing. A new session starts when the student or desired concept changes,
// or when a (question, attempt) pair repeats. Durations come from the raw
// timestamps. Failed tasks are recommended for remediation.
inline std::vector<SessionSummary> analyze(const std::vector<StudentEvent>& events) {
  std::vector<std::vector<const StudentEvent*>> groups;
  std::set<std::pair<ConceptId, int>> seen;
  for (const auto& e : events) {
    const bool fresh = groups.empty() || groups.back().front()->student != e.student ||
                       groups.back().front()->desired != e.desired ||
                       seen.count({e.question, e.attempt}) != 0;
    if (fresh) {
      groups.emplace_back();
      seen.clear();
    }
    groups.back().push_back(&e);
    seen.insert({e.question, e.attempt});
  }

  std::vector<SessionSummary> out;
  for (const auto& group : groups) {
    SessionSummary summary{group.front()->student, group.front()->desired, {}, 0, true, {}, {}};
    std::map<ConceptId, std::size_t> task_index;
    for (const auto* e : group) {
      auto [it, inserted] = task_index.emplace(e->question, summary.tasks.size());
      if (inserted) summary.tasks.push_back(TaskAnalysis{e->question, {}, {}, {}, AnswerVerdict::not_passed});
      auto& task = summary.tasks[it->second];
      const std::int64_t duration = (e->answered_at - e->asked_at).count();
      task.attempts.push_back({e->attempt, e->asked_at, e->answered_at, duration, e->outcome});
      task.attempt_durations.push_back(duration);
      task.average_duration.total += duration;
      task.average_duration.count += 1;
      if (e->outcome == AnswerVerdict::passed) task.final_outcome = AnswerVerdict::passed;
      summary.total_duration += duration;
    }
    for (const auto& task : summary.tasks) {
      if (task.final_outcome == AnswerVerdict::not_passed) {
        summary.prepared = false;
        summary.recommended.push_back(task.question);
      }
    }
    summary.remark = make_remark(summary.desired, summary.prepared, summary.recommended);
    out.push_back(std::move(summary));
  }
  return out;
}

inline nlohmann::json to_json(const SessionSummary& s) {
  nlohmann::json tasks = nlohmann::json::array();
  for (const auto& t : s.tasks) {
    nlohmann::json attempts = nlohmann::json::array();
    for (const auto& a : t.attempts) {
      attempts.push_back({{"attempt", a.attempt},
                          {"asked_at", format_timestamp(a.asked_at)},
                          {"answered_at", format_timestamp(a.answered_at)},
                          {"duration_seconds", a.duration},
                          {"outcome", std::string(to_string(a.outcome))}});
    }
    tasks.push_back({{"question", t.question.str()},
                     {"attempts", std::move(attempts)},
                     {"average_seconds", t.average_duration.seconds()},
                     {"average", t.average_duration.to_string()},
                     {"final_outcome", std::string(to_string(t.final_outcome))}});
  }
  nlohmann::json recommended = nlohmann::json::array();
  for (const auto& r : s.recommended) recommended.push_back(r.str());
  return {{"student", s.student},
          {"desired", s.desired.str()},
          {"tasks", std::move(tasks)},
          {"total_seconds", s.total_duration},
          {"prepared", s.prepared},
          {"recommended", std::move(recommended)},
          {"remark", s.remark}};
}

inline std::string clock_time(Timestamp ts) { return format_timestamp(ts).substr(11, 8); }

inline std::string mm_ss(std::int64_t seconds) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%02lld:%02lld", static_cast<long long>(seconds / 60),
                static_cast<long long>(seconds % 60));
  return buf;
}

// Plain-text table, one block per session.
inline std::string render_analysis(const std::vector<SessionSummary>& summaries) {
  std::ostringstream out;
  for (const auto& s : summaries) {
    out << "Desired concept: " << s.desired.upper() << "  (student " << s.student << ")\n";
    for (std::size_t q = 0; q < s.tasks.size(); ++q) {
      const auto& t = s.tasks[q];
      out << "  Q" << q + 1 << ": " << t.question.upper() << "\n";
      for (const auto& a : t.attempts) {
        out << "    attempt " << a.attempt << ": asked " << clock_time(a.asked_at) << "  answered "
            << clock_time(a.answered_at) << "  " << (a.outcome == AnswerVerdict::passed ? "Passed    " : "Not Passed")
            << "  " << mm_ss(a.duration) << " (" << a.duration << " s)\n";
      }
      out << "    average: " << t.average_duration.to_string() << " s\n";
    }
    out << "  total: " << s.total_duration << " s\n";
    out << "  remark: " << s.remark << "\n";
  }
  return out.str();
}

}  // namespace prereq
