#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cctype>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ineq/cex.hpp"

namespace ineq {

namespace {

// Rewrites sqrt, fractional powers and division into auxiliary variables with
// defining constraints, so the script stays inside polynomial QF_NRA.
struct SmtBuilder {
  std::ostringstream decls, asserts;
  int next_aux = 0;
  std::map<std::string, std::string> aux_for;  // canonical subterm -> aux name

  std::string fresh(const char* prefix) { return std::string(prefix) + std::to_string(next_aux++); }

  static std::string number(const Rat& q) {
    std::string num = q.get_num().get_str();
    bool negative = false;
    if (!num.empty() && num[0] == '-') {
      negative = true;
      num = num.substr(1);
    }
    std::string body = q.get_den() == 1 ? num + ".0" : "(/ " + num + ".0 " + q.get_den().get_str() + ".0)";
    return negative ? "(- " + body + ")" : body;
  }

  std::string translate(const ExprPtr& e) {
    switch (e->op) {
      case Op::Const: return number(e->value);
      case Op::Var: return e->name;
      case Op::Neg: return "(- " + translate(e->a) + ")";
      case Op::Add: return "(+ " + translate(e->a) + " " + translate(e->b) + ")";
      case Op::Sub: return "(- " + translate(e->a) + " " + translate(e->b) + ")";
      case Op::Mul: return "(* " + translate(e->a) + " " + translate(e->b) + ")";
      case Op::Abs: {
        std::string x = translate(e->a);
        return "(ite (>= " + x + " 0.0) " + x + " (- " + x + "))";
      }
      case Op::Div: {
        // q with q * den = num and den != 0.
        std::string key = "div:" + to_string(canonical(e));
        auto it = aux_for.find(key);
        if (it != aux_for.end()) return it->second;
        std::string num = translate(e->a);
        std::string den = translate(e->b);
        std::string q = fresh("aux_d");
        decls << "(declare-const " << q << " Real)\n";
        asserts << "(assert (= (* " << q << " " << den << ") " << num << "))\n";
        asserts << "(assert (distinct " << den << " 0.0))\n";
        aux_for[key] = q;
        return q;
      }
      case Op::Sqrt: {
        std::string key = "sqrt:" + to_string(canonical(e));
        auto it = aux_for.find(key);
        if (it != aux_for.end()) return it->second;
        std::string arg = translate(e->a);
        std::string s = fresh("aux_s");
        decls << "(declare-const " << s << " Real)\n";
        asserts << "(assert (= (* " << s << " " << s << ") " << arg << "))\n";
        asserts << "(assert (>= " << s << " 0.0))\n";
        aux_for[key] = s;
        return s;
      }
      case Op::Pow: {
        if (e->b->op == Op::Const && rat_is_integer(e->b->value)) {
          auto k = rat_to_long(e->b->value);
          if (k && *k >= 1 && *k <= 16) {
            std::string x = translate(e->a);
            std::string body = x;
            for (long i = 1; i < *k; ++i) body = "(* " + body + " " + x + ")";
            return body;
          }
          if (k && *k <= -1 && *k >= -16)
            return translate(div(constant(1), pow_(e->a, constant(-*k))));
        }
        if (e->b->op == Op::Const) {
          // x^(p/q): aux with aux^q = x^p (and aux >= 0 for even q).
          const Rat& q = e->b->value;
          auto den = q.get_den();
          auto num = q.get_num();
          if (den.fits_ulong_p() && num.fits_slong_p() && den.get_ui() <= 6 &&
              std::abs(num.get_si()) <= 16) {
            std::string key = "pow:" + to_string(canonical(e));
            auto it = aux_for.find(key);
            if (it != aux_for.end()) return it->second;
            long p = num.get_si();
            unsigned long r = den.get_ui();
            std::string base =
                translate(p >= 0 ? pow_(e->a, constant(p)) : div(constant(1), pow_(e->a, constant(-p))));
            std::string s = fresh("aux_r");
            decls << "(declare-const " << s << " Real)\n";
            std::string body = s;
            for (unsigned long i = 1; i < r; ++i) body = "(* " + body + " " + s + ")";
            asserts << "(assert (= " << body << " " << base << "))\n";
            if (r % 2 == 0) asserts << "(assert (>= " << s << " 0.0))\n";
            aux_for[key] = s;
            return s;
          }
        }
        throw SmtUnsupported("unsupported exponent: " + to_string(e));
      }
      case Op::Exp: throw SmtUnsupported("exp is outside QF_NRA");
      case Op::Log: throw SmtUnsupported("log is outside QF_NRA");
    }
    throw SmtUnsupported("unknown node");
  }

  std::string relation(const Relation& r, bool negate) {
    std::string l = translate(r.lhs);
    std::string rr = translate(r.rhs);
    RelOp op = r.op;
    if (negate) {
      switch (op) {
        case RelOp::Le: return "(> " + l + " " + rr + ")";
        case RelOp::Lt: return "(>= " + l + " " + rr + ")";
        case RelOp::Ge: return "(< " + l + " " + rr + ")";
        case RelOp::Gt: return "(<= " + l + " " + rr + ")";
        case RelOp::Eq: return "(distinct " + l + " " + rr + ")";
      }
    }
    switch (op) {
      case RelOp::Le: return "(<= " + l + " " + rr + ")";
      case RelOp::Lt: return "(< " + l + " " + rr + ")";
      case RelOp::Ge: return "(>= " + l + " " + rr + ")";
      case RelOp::Gt: return "(> " + l + " " + rr + ")";
      case RelOp::Eq: return "(= " + l + " " + rr + ")";
    }
    return "";
  }
};

struct SubprocessResult {
  bool spawned = false;
  bool timed_out = false;
  std::string output;
};

SubprocessResult run_with_timeout(const std::vector<std::string>& argv, double timeout_seconds) {
  SubprocessResult res;
  int out_pipe[2];
  if (pipe(out_pipe) != 0) return res;
  pid_t pid = fork();
  if (pid < 0) {
    close(out_pipe[0]);
    close(out_pipe[1]);
    return res;
  }
  if (pid == 0) {
    dup2(out_pipe[1], STDOUT_FILENO);
    dup2(out_pipe[1], STDERR_FILENO);
    close(out_pipe[0]);
    close(out_pipe[1]);
    std::vector<char*> args;
    for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);
    execvp(args[0], args.data());
    _exit(127);
  }
  close(out_pipe[1]);
  res.spawned = true;
  const int deadline_ms = static_cast<int>(timeout_seconds * 1000);
  int waited = 0;
  char buf[4096];
  bool child_done = false;
  while (true) {
    struct pollfd pfd {
      out_pipe[0], POLLIN, 0
    };
    int step = 50;
    int r = poll(&pfd, 1, step);
    if (r > 0 && (pfd.revents & POLLIN)) {
      ssize_t got = read(out_pipe[0], buf, sizeof buf);
      if (got > 0) res.output.append(buf, static_cast<size_t>(got));
      if (got == 0) break;
    } else if (r > 0 && (pfd.revents & (POLLHUP | POLLERR))) {
      ssize_t got;
      while ((got = read(out_pipe[0], buf, sizeof buf)) > 0)
        res.output.append(buf, static_cast<size_t>(got));
      break;
    }
    waited += step;
    int status;
    if (!child_done && waitpid(pid, &status, WNOHANG) == pid) child_done = true;
    if (waited >= deadline_ms) {
      res.timed_out = true;
      kill(pid, SIGKILL);
      break;
    }
    if (child_done && r == 0) break;
  }
  close(out_pipe[0]);
  if (!child_done) waitpid(pid, nullptr, 0);
  // exec failure shows up as exit 127 with no output
  if (res.output.empty() && res.timed_out == false) {
    // Could be a legitimate empty answer; caller decides.
  }
  return res;
}

// Parses "(define-fun x () Real <value>)" entries. Values may be decimals,
// integers, (/ a b), or (- ...). Anything else (root-obj etc.) fails.
std::optional<Assignment> parse_model(const std::string& text,
                                      const std::vector<std::string>& vars) {
  Assignment out;
  for (const auto& v : vars) {
    auto pos = text.find("define-fun " + v + " ");
    if (pos == std::string::npos) return std::nullopt;
    pos = text.find("Real", pos);
    if (pos == std::string::npos) return std::nullopt;
    pos += 4;
    // capture the following s-expression or atom
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    std::string tok;
    if (pos < text.size() && text[pos] == '(') {
      int depth = 0;
      size_t i = pos;
      for (; i < text.size(); ++i) {
        if (text[i] == '(') ++depth;
        if (text[i] == ')') {
          --depth;
          if (depth == 0) {
            ++i;
            break;
          }
        }
      }
      tok = text.substr(pos, i - pos);
    } else {
      size_t i = pos;
      while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i])) &&
             text[i] != ')')
        ++i;
      tok = text.substr(pos, i - pos);
    }
    // Evaluate the token: atom | (- x) | (/ a b) possibly nested once.
    std::function<std::optional<Rat>(const std::string&)> value =
        [&](const std::string& s) -> std::optional<Rat> {
      std::string t = s;
      while (!t.empty() && std::isspace(static_cast<unsigned char>(t.front()))) t.erase(t.begin());
      while (!t.empty() && std::isspace(static_cast<unsigned char>(t.back()))) t.pop_back();
      if (t.empty()) return std::nullopt;
      if (t[0] != '(') return rat_from_string(t);
      // strip parens
      std::string inner = t.substr(1, t.size() - 2);
      std::istringstream is(inner);
      std::string op;
      is >> op;
      std::string rest;
      std::getline(is, rest);
      if (op == "-") {
        auto v = value(rest);
        if (!v) return std::nullopt;
        return Rat(-*v);
      }
      if (op == "/") {
        // split rest into two s-expressions/atoms
        std::vector<std::string> parts;
        int depth = 0;
        std::string cur;
        for (char c : rest) {
          if (c == '(') ++depth;
          if (c == ')') --depth;
          if (std::isspace(static_cast<unsigned char>(c)) && depth == 0 && !cur.empty()) {
            parts.push_back(cur);
            cur.clear();
          } else if (!std::isspace(static_cast<unsigned char>(c)) || depth > 0) {
            cur += c;
          }
        }
        if (!cur.empty()) parts.push_back(cur);
        if (parts.size() != 2) return std::nullopt;
        auto a = value(parts[0]);
        auto b = value(parts[1]);
        if (!a || !b || *b == 0) return std::nullopt;
        return Rat(*a / *b);
      }
      return std::nullopt;
    };
    auto q = value(tok);
    if (!q) return std::nullopt;
    out.exact[v] = *q;
    out.vals[v] = rat_to_double(*q);
  }
  return out;
}

}  // namespace

std::string emit_smtlib(const ProofGoal& goal) {
  SmtBuilder b;
  std::ostringstream head;
  head << "(set-logic QF_NRA)\n(set-option :produce-models true)\n";
  for (const auto& v : goal.vars) head << "(declare-const " << v.name << " Real)\n";
  std::ostringstream body;
  for (const auto& v : goal.vars)
    if (v.positive) body << "(assert (> " << v.name << " 0.0))\n";
  for (const auto& h : goal.hypotheses) body << "(assert " << b.relation(h, false) << ")\n";
  body << "(assert " << b.relation(goal.conclusion, true) << ")\n";
  std::ostringstream out;
  out << head.str() << b.decls.str() << b.asserts.str() << body.str()
      << "(check-sat)\n(get-model)\n";
  return out.str();
}

SmtResult smt_check(const ProofGoal& goal, const std::string& solver_cmd,
                    double timeout_seconds) {
  SmtResult res;
  if (solver_cmd.empty()) return res;
  std::string script;
  try {
    script = emit_smtlib(goal);
  } catch (const SmtUnsupported&) {
    res.verdict = SmtVerdict::Unknown;
    return res;
  }
  char path[] = "/tmp/ineq_smt_XXXXXX";
  int fd = mkstemp(path);
  if (fd < 0) return res;
  {
    FILE* f = fdopen(fd, "w");
    fwrite(script.data(), 1, script.size(), f);
    fclose(f);
  }
  std::vector<std::string> argv;
  {
    std::istringstream is(solver_cmd);
    std::string tok;
    while (is >> tok) argv.push_back(tok);
  }
  argv.push_back(path);
  SubprocessResult run = run_with_timeout(argv, timeout_seconds);
  unlink(path);
  res.raw = run.output;
  if (!run.spawned) return res;
  if (run.timed_out) {
    res.verdict = SmtVerdict::Unknown;
    return res;
  }
  if (run.output.find("unsat") != std::string::npos) {
    res.verdict = SmtVerdict::Unsat;
    return res;
  }
  auto satpos = run.output.find("sat");
  if (satpos == std::string::npos) {
    res.verdict = run.output.empty() ? SmtVerdict::Unavailable : SmtVerdict::Unknown;
    return res;
  }
  res.verdict = SmtVerdict::Unknown;
  auto model = parse_model(run.output, [&] {
    std::vector<std::string> names;
    for (const auto& v : goal.vars) names.push_back(v.name);
    return names;
  }());
  if (!model) return res;  // malformed model
  double resid = hypothesis_residual(goal, model->vals);
  auto viol = conclusion_violation(goal, model->vals);
  if (resid <= 1e-6 && viol && *viol > 1e-6) {
    res.verdict = SmtVerdict::Sat;
    res.model = model;
  }
  return res;
}

}  // namespace ineq
