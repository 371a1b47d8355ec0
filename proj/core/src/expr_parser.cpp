#include <cctype>
#include <charconv>
#include <string>

#include "curvlab/error.hpp"
#include "curvlab/expr.hpp"
#include "expr_node.hpp"

namespace curvlab {
namespace {

struct Builtin {
  const char* name;
  Op op;
};

constexpr Builtin kBuiltins[] = {
    {"sin", Op::kSin},   {"cos", Op::kCos}, {"exp", Op::kExp},
    {"log", Op::kLog},   {"abs", Op::kAbs}, {"sqrt", Op::kSqrt},
    {"min", Op::kMin},   {"max", Op::kMax}, {"persq", Op::kPersq},
};

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  NodePtr parse() {
    NodePtr e = expression();
    skip_ws();
    if (pos_ != src_.size()) fail(ErrorCode::kParse, "unexpected '" + std::string(1, src_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(ErrorCode code, const std::string& msg) const { throw ParseError(code, msg, pos_); }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(ErrorCode::kParse, std::string("expected '") + c + "'");
  }

  NodePtr expression() {
    NodePtr lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = expr::add(lhs, term());
      } else if (accept('-')) {
        lhs = expr::sub(lhs, term());
      } else {
        return lhs;
      }
    }
  }

  NodePtr term() {
    NodePtr lhs = factor();
    for (;;) {
      if (accept('*')) {
        lhs = expr::mul(lhs, factor());
      } else if (accept('/')) {
        lhs = expr::div(lhs, factor());
      } else {
        return lhs;
      }
    }
  }

  NodePtr factor() {
    if (accept('-')) return expr::neg(factor());
    NodePtr b = base();
    if (accept('^')) {
      skip_ws();
      const std::size_t start = pos_;
      if (pos_ < src_.size() && (src_[pos_] == '-' || src_[pos_] == '+')) ++pos_;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      int k = 0;
      const char* first = src_.data() + start;
      if (*first == '+') ++first;
      const auto [ptr, ec] = std::from_chars(first, src_.data() + pos_, k);
      if (ec != std::errc() || ptr != src_.data() + pos_ || pos_ == start) {
        pos_ = start;
        fail(ErrorCode::kParse, "exponent must be an integer");
      }
      b = expr::pow(b, k);
    }
    return b;
  }

  NodePtr number() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.'))
      ++pos_;
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < src_.size() && (src_[p] == '+' || src_[p] == '-')) ++p;
      if (p < src_.size() && std::isdigit(static_cast<unsigned char>(src_[p]))) {
        pos_ = p;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      }
    }
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, v);
    if (ec != std::errc() || ptr != src_.data() + pos_) {
      pos_ = start;
      fail(ErrorCode::kParse, "malformed number");
    }
    return expr::constant(v);
  }

  NodePtr base() {
    skip_ws();
    if (pos_ >= src_.size()) fail(ErrorCode::kParse, "unexpected end of input");
    const char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (c == '(') {
      ++pos_;
      NodePtr e = expression();
      expect(')');
      return e;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
        ++pos_;
      const std::string name(src_.substr(start, pos_ - start));
      if (name == "x") return expr::var(0);
      if (name == "y") return expr::var(1);
      if (name == "pi") return expr::pi();
      for (const Builtin& b : kBuiltins) {
        if (name != b.name) continue;
        const std::size_t call_pos = start;
        expect('(');
        std::vector<NodePtr> args{expression()};
        while (accept(',')) args.push_back(expression());
        expect(')');
        const int want = expr::arity(b.op);
        if (static_cast<int>(args.size()) != want) {
          throw ParseError(ErrorCode::kArity,
                           name + " expects " + std::to_string(want) + " argument(s), got " +
                               std::to_string(args.size()),
                           call_pos);
        }
        return expr::call(b.op, std::move(args));
      }
      pos_ = start;
      fail(ErrorCode::kUnknownIdentifier, "unknown identifier '" + name + "'");
    }
    fail(ErrorCode::kParse, "unexpected '" + std::string(1, c) + "'");
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

}  // namespace

FieldExpr parse_field(std::string_view source) { return FieldExpr(Parser(source).parse()); }

}  // namespace curvlab
