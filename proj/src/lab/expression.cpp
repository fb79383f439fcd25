#include "hypolab/lab/expression.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fmt/format.h>

#include "hypolab/common/error.hpp"

namespace hypolab::lab {

struct Expression::Node {
  enum class Op { number, column, neg, add, sub, mul, div, log, log1p, abs, bin, time_delta } op;
  double value = 0.0;
  std::string column;
  std::vector<double> edges;
  std::shared_ptr<const Node> lhs, rhs;
};

namespace {

using Node = Expression::Node;
using NodePtr = std::shared_ptr<const Node>;

class Parser {
 public:
  Parser(const std::string& s, std::set<std::string>& cols, std::set<std::string>& time_cols)
      : s_(s), cols_(cols), time_cols_(time_cols) {}

  NodePtr parse() {
    auto n = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected trailing input");
    return n;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(fmt::format("expression '{}': {} at offset {}", s_, what, pos_));
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  void need(char c) {
    if (!eat(c)) fail(fmt::format("expected '{}'", c));
  }
  static NodePtr make(Node::Op op, NodePtr l = nullptr, NodePtr r = nullptr) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->lhs = std::move(l);
    n->rhs = std::move(r);
    return n;
  }

  NodePtr expr() {
    auto n = term();
    while (true) {
      if (eat('+')) n = make(Node::Op::add, n, term());
      else if (eat('-')) n = make(Node::Op::sub, n, term());
      else return n;
    }
  }
  NodePtr term() {
    auto n = unary();
    while (true) {
      if (eat('*')) n = make(Node::Op::mul, n, unary());
      else if (eat('/')) n = make(Node::Op::div, n, unary());
      else return n;
    }
  }
  NodePtr unary() {
    if (eat('-')) return make(Node::Op::neg, unary());
    if (eat('+')) return unary();
    return primary();
  }
  double number() {
    skip();
    const char* begin = s_.data() + pos_;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(begin, s_.data() + s_.size(), v);
    if (ec != std::errc()) fail("expected a number");
    pos_ += static_cast<std::size_t>(ptr - begin);
    return v;
  }
  std::string identifier() {
    skip();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
    return s_.substr(start, pos_ - start);
  }
  NodePtr column_ref(std::string name) {
    cols_.insert(name);
    auto n = std::make_shared<Node>();
    n->op = Node::Op::column;
    n->column = std::move(name);
    return n;
  }
  NodePtr primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      auto n = expr();
      need(')');
      return n;
    }
    if (c == '`') {
      const std::size_t close = s_.find('`', pos_ + 1);
      if (close == std::string::npos) fail("unterminated quoted column name");
      std::string name = s_.substr(pos_ + 1, close - pos_ - 1);
      pos_ = close + 1;
      return column_ref(std::move(name));
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      auto n = std::make_shared<Node>();
      n->op = Node::Op::number;
      n->value = number();
      return n;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::string name = identifier();
      if (!eat('(')) return column_ref(std::move(name));
      if (name == "log" || name == "log1p" || name == "abs") {
        auto arg = expr();
        need(')');
        return make(name == "log" ? Node::Op::log : name == "log1p" ? Node::Op::log1p : Node::Op::abs, arg);
      }
      if (name == "bin") {
        auto arg = expr();
        need(',');
        need('[');
        auto n = std::make_shared<Node>();
        n->op = Node::Op::bin;
        n->lhs = arg;
        if (!eat(']')) {
          do {
            n->edges.push_back(number());
          } while (eat(','));
          need(']');
        }
        need(')');
        if (n->edges.empty()) fail("bin needs at least one edge");
        for (std::size_t i = 1; i < n->edges.size(); ++i) {
          if (!(n->edges[i] > n->edges[i - 1])) fail("bin edges must be strictly increasing");
        }
        return n;
      }
      if (name == "time_delta") {
        auto a = expr();
        need(',');
        auto b = expr();
        need(')');
        for (const auto& arg : {a, b}) {
          if (arg->op != Node::Op::column) fail("time_delta arguments must be column names");
          time_cols_.insert(arg->column);
        }
        return make(Node::Op::time_delta, a, b);
      }
      fail(fmt::format("unknown function '{}'", name));
    }
    fail(fmt::format("unexpected character '{}'", c));
  }

  const std::string& s_;
  std::size_t pos_ = 0;
  std::set<std::string>& cols_;
  std::set<std::string>& time_cols_;
};

std::optional<double> eval(const Node& n, const data::Dataset& d, std::size_t row) {
  auto finite = [](double v) -> std::optional<double> {
    if (std::isfinite(v)) return v;
    return std::nullopt;
  };
  switch (n.op) {
    case Node::Op::number: return n.value;
    case Node::Op::column: return data::as_number(d.column(n.column).values[row]);
    case Node::Op::neg: {
      auto v = eval(*n.lhs, d, row);
      if (!v) return std::nullopt;
      return -*v;
    }
    case Node::Op::log:
    case Node::Op::log1p:
    case Node::Op::abs: {
      auto v = eval(*n.lhs, d, row);
      if (!v) return std::nullopt;
      if (n.op == Node::Op::abs) return std::fabs(*v);
      return finite(n.op == Node::Op::log ? std::log(*v) : std::log1p(*v));
    }
    case Node::Op::bin: {
      auto v = eval(*n.lhs, d, row);
      if (!v) return std::nullopt;
      double idx = 0;
      for (double e : n.edges) {
        if (*v >= e) ++idx;
      }
      return idx;
    }
    default: break;
  }
  auto a = eval(*n.lhs, d, row);
  auto b = eval(*n.rhs, d, row);
  if (!a || !b) return std::nullopt;
  switch (n.op) {
    case Node::Op::add: return finite(*a + *b);
    case Node::Op::sub:
    case Node::Op::time_delta: return finite(*a - *b);
    case Node::Op::mul: return finite(*a * *b);
    case Node::Op::div: return finite(*a / *b);
    default: return std::nullopt;
  }
}

}  // namespace

Expression Expression::parse(const std::string& source) {
  Expression e;
  e.source_ = source;
  Parser p(source, e.columns_, e.time_columns_);
  e.root_ = p.parse();
  return e;
}

std::optional<double> Expression::evaluate(const data::Dataset& dataset, std::size_t row) const {
  return eval(*root_, dataset, row);
}

}  // namespace hypolab::lab
