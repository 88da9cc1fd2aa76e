#pragma once

// `prereq` command line. Exit status: 0 ok, 1 domain error, 2 usage error.

#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "prereq/error.hpp"
#include "prereq/ontology.hpp"
#include "prereq/question_bank.hpp"
#include "prereq/rule_calc.hpp"
#include "prereq/rule_gen.hpp"
#include "prereq/service.hpp"
#include "prereq/session.hpp"
#include "prereq/student_model.hpp"

namespace prereq {

namespace detail {

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text)) fail(ErrorCode::StorageError, "cannot write " + path);
}

inline std::optional<std::string> prompt_line(std::istream& in, std::ostream& out, const std::string& label) {
  out << label << std::flush;
  std::string line;
  if (!std::getline(in, line)) return std::nullopt;
  return line;
}

inline void print_recommendation(std::ostream& out, const Session& s) {
  const auto& st = s.state();
  out << "Verdict: " << to_string(st.recommendation->verdict) << "\n";
  for (const auto& t : st.recommendation->targets) out << "  " << t.id.upper() << "  " << t.url << "\n";
  out << "Remark: " << st.remark << "\n";
}

// Interactive terminal loop; reads the desired concept (unless given) and
// one answer line per question from `in`.
inline int run_terminal_session(Session session, std::istream& in, std::ostream& out) {
  if (session.state().phase != Phase::recommended) {
    out << "Pre-assessment on " << session.state().assessed_prereq->upper() << " before "
        << session.state().desired.upper() << "\n";
    while (auto q = session.next_question()) {
      out << "\nQ (" << q->leaf.upper() << ", attempt " << q->attempt << "): " << q->prompt << "\n";
      std::optional<std::string> answer;
      for (;;) {
        answer = prompt_line(in, out, "> ");
        if (!answer) {
          out << "\n";
          fail(ErrorCode::IncompleteOutcome, "input ended before the quiz was finished");
        }
        if (answer->find_first_not_of(" \t\r") != std::string::npos) break;
      }
      out << session.submit_answer(*answer).message << "\n";
    }
    out << "\n";
  }
  session.finalize();
  print_recommendation(out, session);
  return 0;
}

inline std::atomic<Service*>& active_service() {
  static std::atomic<Service*> service{nullptr};
  return service;
}

}  // namespace detail

inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr,
                    std::istream& in = std::cin) {
  CLI::App app{"Prerequisite pre-assessment engine", "prereq"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Expand all help");

  std::string ont_path, bank_path, log_path, student, desired, csv_path, svg_path, axis = "c", c_text, n_text;
  std::int64_t c = 0, n = 0, r = 0;
  bool deep = false, as_json = false, allow_test_clock = false;
  int max_attempts = 2, port = 8080;
  std::string host = "127.0.0.1";
  std::int64_t idle_minutes = 30;

  auto* validate = app.add_subcommand("validate", "Check that an ontology file is regular");
  validate->add_option("ontology", ont_path, "Ontology file")->required();

  auto* estimate = app.add_subcommand("estimate", "R = C*2^N + 1");
  estimate->add_option("--c", c, "Prerequisite classes C")->required();
  estimate->add_option("--n", n, "Leaves per parent N")->required();

  std::int64_t n_new = 0, n_old = 0;
  auto* increment = app.add_subcommand("increment", "Rules after adding a leaf per parent");
  increment->add_option("--r", r, "Current rule count")->required()->check(CLI::NonNegativeNumber);
  increment->add_option("--c", c, "Prerequisite classes C")->required();
  increment->add_option("--n-new", n_new, "New leaf count")->required();

  auto* decrement = app.add_subcommand("decrement", "Rules after removing a leaf per parent");
  decrement->add_option("--r", r, "Current rule count")->required()->check(CLI::NonNegativeNumber);
  decrement->add_option("--c", c, "Prerequisite classes C")->required();
  decrement->add_option("--n-old", n_old, "Current leaf count")->required();

  auto* sweep_cmd = app.add_subcommand("sweep", "Tabulate R over ranges of C and N");
  sweep_cmd->add_option("--c", c_text, "C range, A..B")->required();
  sweep_cmd->add_option("--n", n_text, "N range, A..B")->required();
  sweep_cmd->add_option("--csv", csv_path, "Write the dataset here");
  sweep_cmd->add_option("--svg", svg_path, "Write a chart here");
  sweep_cmd->add_option("--axis", axis, "Chart x axis")->check(CLI::IsMember({"c", "n"}));

  auto* rules_cmd = app.add_subcommand("rules", "Print the classified rule set");
  rules_cmd->add_option("ontology", ont_path, "Ontology file")->required();
  rules_cmd->add_flag("--deep-descent", deep, "All-fail sends the learner one level further down");
  rules_cmd->add_flag("--json", as_json, "JSON output");

  auto* session_cmd = app.add_subcommand("session", "Interactive pre-assessment in the terminal");
  session_cmd->add_option("ontology", ont_path, "Ontology file")->required();
  session_cmd->add_option("--bank", bank_path, "Question bank (JSON)")->required();
  session_cmd->add_option("--log", log_path, "Student event log")->required();
  session_cmd->add_option("--student", student, "Student id")->required();
  session_cmd->add_option("--desired", desired, "Desired concept (asked for when omitted)");
  session_cmd->add_option("--max-attempts", max_attempts, "Attempts per question")->check(CLI::Range(1, 10));
  session_cmd->add_flag("--deep-descent", deep, "All-fail sends the learner one level further down");

  auto* analyze_cmd = app.add_subcommand("analyze", "Timing analysis of a student's sessions");
  analyze_cmd->add_option("--log", log_path, "Student event log")->required();
  analyze_cmd->add_option("--student", student, "Student id")->required();
  analyze_cmd->add_flag("--json", as_json, "JSON output");

  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP/JSON service");
  serve_cmd->add_option("ontology", ont_path, "Ontology file")->required();
  serve_cmd->add_option("--bank", bank_path, "Question bank (JSON)")->required();
  serve_cmd->add_option("--log", log_path, "Student event log")->required();
  serve_cmd->add_option("--port", port, "TCP port (0 = any)")->check(CLI::Range(0, 65535));
  serve_cmd->add_option("--host", host, "Bind address");
  serve_cmd->add_option("--max-attempts", max_attempts, "Attempts per question")->check(CLI::Range(1, 10));
  serve_cmd->add_option("--idle-minutes", idle_minutes, "Session idle timeout")->check(CLI::PositiveNumber);
  serve_cmd->add_flag("--deep-descent", deep, "All-fail sends the learner one level further down");
  serve_cmd->add_flag("--allow-test-clock", allow_test_clock, "Honour the X-Test-Clock request header");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  const ClassifyPolicy policy{deep, max_attempts};
  try {
    if (*validate) {
      const auto graph = load_ontology(read_text_file(ont_path));
      const auto params = validate_regular(graph);
      out << "ok: C=" << params.c << " N=" << params.n << " T=" << params.t << " ("
          << estimate_rules(params.c, params.n).value << " rules)\n";
    } else if (*estimate) {
      out << estimate_rules(c, n).value << "\n";
    } else if (*increment) {
      out << increment_rules(RuleCount{static_cast<std::uint64_t>(r)}, c, n_new).value << "\n";
    } else if (*decrement) {
      out << decrement_rules(RuleCount{static_cast<std::uint64_t>(r)}, c, n_old).value << "\n";
    } else if (*sweep_cmd) {
      IntRange c_range, n_range;
      try {
        c_range = parse_int_range(c_text);
        n_range = parse_int_range(n_text);
      } catch (const Error& e) {
        err << e.detail() << "\n";
        return 2;
      }
      const auto grid = sweep(c_range, n_range);
      const auto csv = emit_dataset_csv(grid);
      if (!csv_path.empty()) detail::write_file(csv_path, csv);
      if (!svg_path.empty()) {
        detail::write_file(svg_path, emit_plot_svg(grid, axis == "c" ? PlotAxis::c_vs_r : PlotAxis::n_vs_r));
      }
      if (csv_path.empty() && svg_path.empty()) out << csv;
    } else if (*rules_cmd) {
      const auto rules = generate_rules(load_ontology(read_text_file(ont_path)), policy);
      if (as_json) {
        out << rules_to_json(rules).dump(2) << "\n";
      } else {
        out << rules_to_text(rules);
      }
    } else if (*session_cmd) {
      const auto graph = load_ontology(read_text_file(ont_path));
      const auto rules = generate_rules(graph, policy);
      const auto bank = load_bank(read_text_file(bank_path), graph);
      EventLog log(log_path);
      if (desired.empty()) {
        auto line = detail::prompt_line(in, out, "Desired concept: ");
        if (!line) fail(ErrorCode::UnknownDesiredConcept, "no desired concept given");
        desired = *line;
      }
      SessionEnv env;
      env.graph = &graph;
      env.rules = &rules;
      env.bank = &bank;
      env.log = &log;
      env.policy = policy;
      return detail::run_terminal_session(Session::start(student, desired, std::move(env)), in, out);
    } else if (*analyze_cmd) {
      const auto summaries = analyze(EventLog(log_path).load_history(student));
      if (as_json) {
        nlohmann::json list = nlohmann::json::array();
        for (const auto& s : summaries) list.push_back(to_json(s));
        out << list.dump(2) << "\n";
      } else if (summaries.empty()) {
        out << "no sessions recorded for " << student << "\n";
      } else {
        out << render_analysis(summaries);
      }
    } else if (*serve_cmd) {
      ServerConfig config;
      config.host = host;
      config.port = port;
      config.ontology_path = ont_path;
      config.bank_path = bank_path;
      config.log_path = log_path;
      config.policy = policy;
      config.idle_timeout = std::chrono::minutes(idle_minutes);
      config.allow_test_clock = allow_test_clock;
      Service service(config);
      const int bound = service.bind();
      out << "listening on http://" << host << ":" << bound << std::endl;
      detail::active_service() = &service;
      std::signal(SIGINT, [](int) {
        if (Service* s = detail::active_service().load()) s->stop();
      });
      std::signal(SIGTERM, [](int) {
        if (Service* s = detail::active_service().load()) s->stop();
      });
      service.run();
      detail::active_service() = nullptr;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace prereq
