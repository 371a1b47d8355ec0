#include "curvlab/expr.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "curvlab/error.hpp"
#include "curvlab/io.hpp"
#include "expr_node.hpp"

namespace curvlab {

const char* to_string(Regularity r) {
  switch (r) {
    case Regularity::kSmooth: return "smooth";
    case Regularity::kC11: return "C11";
    case Regularity::kC1: return "C1";
  }
  return "smooth";
}

Regularity regularity_from_string(const std::string& name) {
  if (name == "smooth") return Regularity::kSmooth;
  if (name == "C11") return Regularity::kC11;
  if (name == "C1") return Regularity::kC1;
  throw Error(ErrorCode::kInvalidArgument, "unknown regularity '" + name + "'");
}

namespace expr {
namespace {

bool is_const(const NodePtr& n, double v) { return n->op == Op::kConst && n->value == v; }

NodePtr make(Op op, std::vector<NodePtr> args) {
  auto n = std::make_shared<ExprNode>();
  n->op = op;
  n->args = std::move(args);
  return n;
}

}  // namespace

int arity(Op op) {
  switch (op) {
    case Op::kConst:
    case Op::kPi:
    case Op::kX:
    case Op::kY: return 0;
    case Op::kNeg:
    case Op::kPow:
    case Op::kSin:
    case Op::kCos:
    case Op::kExp:
    case Op::kLog:
    case Op::kAbs:
    case Op::kSqrt:
    case Op::kPDisp: return 1;
    case Op::kAdd:
    case Op::kSub:
    case Op::kMul:
    case Op::kDiv:
    case Op::kMin:
    case Op::kMax: return 2;
    case Op::kIfPos: return 3;
    case Op::kPersq: return 4;
  }
  return 0;
}

NodePtr constant(double c) {
  auto n = std::make_shared<ExprNode>();
  n->op = Op::kConst;
  n->value = c;
  return n;
}

NodePtr pi() { return make(Op::kPi, {}); }
NodePtr var(int axis) { return make(axis == 0 ? Op::kX : Op::kY, {}); }

NodePtr add(NodePtr a, NodePtr b) {
  if (is_const(a, 0.0)) return b;
  if (is_const(b, 0.0)) return a;
  if (b->op == Op::kNeg) return sub(std::move(a), b->args[0]);
  return make(Op::kAdd, {std::move(a), std::move(b)});
}

NodePtr sub(NodePtr a, NodePtr b) {
  if (is_const(b, 0.0)) return a;
  if (is_const(a, 0.0)) return neg(std::move(b));
  return make(Op::kSub, {std::move(a), std::move(b)});
}

NodePtr mul(NodePtr a, NodePtr b) {
  if (is_const(a, 0.0) || is_const(b, 0.0)) return constant(0.0);
  if (is_const(a, 1.0)) return b;
  if (is_const(b, 1.0)) return a;
  if (a->op == Op::kNeg) return neg(mul(a->args[0], std::move(b)));
  if (b->op == Op::kNeg) return neg(mul(std::move(a), b->args[0]));
  return make(Op::kMul, {std::move(a), std::move(b)});
}

NodePtr div(NodePtr a, NodePtr b) {
  if (is_const(a, 0.0)) return constant(0.0);
  if (is_const(b, 1.0)) return a;
  return make(Op::kDiv, {std::move(a), std::move(b)});
}

NodePtr neg(NodePtr a) {
  if (is_const(a, 0.0)) return a;
  if (a->op == Op::kNeg) return a->args[0];
  return make(Op::kNeg, {std::move(a)});
}

NodePtr pow(NodePtr a, int n) {
  if (n == 0) return constant(1.0);
  if (n == 1) return a;
  if (is_const(a, 0.0) && n > 0) return a;
  auto node = std::make_shared<ExprNode>();
  node->op = Op::kPow;
  node->exponent = n;
  node->args = {std::move(a)};
  return node;
}

NodePtr call(Op op, std::vector<NodePtr> args) { return make(op, std::move(args)); }

}  // namespace expr

namespace {

using namespace expr;

NodePtr differentiate(const NodePtr& n, int axis) {
  const auto& a = n->args;
  switch (n->op) {
    case Op::kConst:
    case Op::kPi: return constant(0.0);
    case Op::kX: return constant(axis == 0 ? 1.0 : 0.0);
    case Op::kY: return constant(axis == 1 ? 1.0 : 0.0);
    case Op::kAdd: return add(differentiate(a[0], axis), differentiate(a[1], axis));
    case Op::kSub: return sub(differentiate(a[0], axis), differentiate(a[1], axis));
    case Op::kMul:
      return add(mul(differentiate(a[0], axis), a[1]), mul(a[0], differentiate(a[1], axis)));
    case Op::kDiv: {
      const NodePtr da = differentiate(a[0], axis);
      const NodePtr db = differentiate(a[1], axis);
      if (is_const(db, 0.0)) return div(da, a[1]);
      return div(sub(mul(da, a[1]), mul(a[0], db)), pow(a[1], 2));
    }
    case Op::kNeg: return neg(differentiate(a[0], axis));
    case Op::kPow: {
      const NodePtr da = differentiate(a[0], axis);
      const int k = n->exponent;
      return mul(mul(constant(k), pow(a[0], k - 1)), da);
    }
    case Op::kSin: return mul(differentiate(a[0], axis), call(Op::kCos, {a[0]}));
    case Op::kCos: return neg(mul(differentiate(a[0], axis), call(Op::kSin, {a[0]})));
    case Op::kExp: return mul(differentiate(a[0], axis), n);
    case Op::kLog: return div(differentiate(a[0], axis), a[0]);
    case Op::kSqrt: return div(differentiate(a[0], axis), mul(constant(2.0), n));
    case Op::kAbs: {
      const NodePtr da = differentiate(a[0], axis);
      if (is_const(da, 0.0)) return da;
      return call(Op::kIfPos, {a[0], da, neg(da)});
    }
    case Op::kMin: {
      const NodePtr da = differentiate(a[0], axis);
      const NodePtr db = differentiate(a[1], axis);
      if (is_const(da, 0.0) && is_const(db, 0.0)) return da;
      return call(Op::kIfPos, {sub(a[1], a[0]), da, db});
    }
    case Op::kMax: {
      const NodePtr da = differentiate(a[0], axis);
      const NodePtr db = differentiate(a[1], axis);
      if (is_const(da, 0.0) && is_const(db, 0.0)) return da;
      return call(Op::kIfPos, {sub(a[0], a[1]), da, db});
    }
    case Op::kIfPos: {
      const NodePtr dp = differentiate(a[1], axis);
      const NodePtr dq = differentiate(a[2], axis);
      if (is_const(dp, 0.0) && is_const(dq, 0.0)) return dp;
      return call(Op::kIfPos, {a[0], dp, dq});
    }
    case Op::kPDisp: return differentiate(a[0], axis);
    case Op::kPersq: {
      const NodePtr dzx = sub(differentiate(a[0], axis), differentiate(a[2], axis));
      const NodePtr dzy = sub(differentiate(a[1], axis), differentiate(a[3], axis));
      const NodePtr px = call(Op::kPDisp, {sub(a[0], a[2])});
      const NodePtr py = call(Op::kPDisp, {sub(a[1], a[3])});
      return add(mul(mul(constant(2.0), px), dzx), mul(mul(constant(2.0), py), dzy));
    }
  }
  return constant(0.0);
}

const char* function_name(Op op) {
  switch (op) {
    case Op::kSin: return "sin";
    case Op::kCos: return "cos";
    case Op::kExp: return "exp";
    case Op::kLog: return "log";
    case Op::kAbs: return "abs";
    case Op::kSqrt: return "sqrt";
    case Op::kMin: return "min";
    case Op::kMax: return "max";
    case Op::kPersq: return "persq";
    case Op::kIfPos: return "ifpos";
    case Op::kPDisp: return "pdisp";
    default: return "";
  }
}

int precedence(const NodePtr& n) {
  switch (n->op) {
    case Op::kAdd:
    case Op::kSub: return 1;
    case Op::kMul:
    case Op::kDiv: return 2;
    case Op::kNeg: return 3;
    case Op::kPow: return 4;
    case Op::kConst: return n->value < 0.0 ? 3 : 5;
    default: return 5;
  }
}

void print(const NodePtr& n, std::string& out) {
  auto child = [&](const NodePtr& c, bool parens) {
    if (parens) out += '(';
    print(c, out);
    if (parens) out += ')';
  };
  const auto& a = n->args;
  switch (n->op) {
    case Op::kConst: out += format_double(n->value); return;
    case Op::kPi: out += "pi"; return;
    case Op::kX: out += 'x'; return;
    case Op::kY: out += 'y'; return;
    case Op::kAdd:
      child(a[0], false);
      out += '+';
      child(a[1], precedence(a[1]) < 1 || precedence(a[1]) == 3);
      return;
    case Op::kSub:
      child(a[0], false);
      out += '-';
      child(a[1], precedence(a[1]) <= 1 || precedence(a[1]) == 3);
      return;
    case Op::kMul:
      child(a[0], precedence(a[0]) < 2);
      out += '*';
      child(a[1], precedence(a[1]) < 2 || precedence(a[1]) == 3 || a[1]->op == Op::kDiv);
      return;
    case Op::kDiv:
      child(a[0], precedence(a[0]) < 2);
      out += '/';
      child(a[1], precedence(a[1]) <= 3);
      return;
    case Op::kNeg:
      out += '-';
      child(a[0], precedence(a[0]) <= 3);
      return;
    case Op::kPow:
      child(a[0], precedence(a[0]) < 5);
      out += '^';
      out += std::to_string(n->exponent);
      return;
    default:
      out += function_name(n->op);
      out += '(';
      for (std::size_t k = 0; k < a.size(); ++k) {
        if (k) out += ',';
        print(a[k], out);
      }
      out += ')';
      return;
  }
}

bool contains_kink(const NodePtr& n) {
  switch (n->op) {
    case Op::kAbs:
    case Op::kMin:
    case Op::kMax:
    case Op::kPersq:
    case Op::kIfPos:
    case Op::kPDisp: return true;
    default: break;
  }
  return std::any_of(n->args.begin(), n->args.end(), contains_kink);
}

bool depends_on_xy(const NodePtr& n) {
  if (n->op == Op::kX || n->op == Op::kY) return true;
  return std::any_of(n->args.begin(), n->args.end(), depends_on_xy);
}

}  // namespace

// Postfix program evaluated on a fixed-size stack.
struct ExprProgram {
  struct Instr {
    Op op;
    double value;
    int exponent;
  };
  std::vector<Instr> code;
  int depth = 0;

  void emit(const NodePtr& n, int& cur) {
    for (const auto& c : n->args) emit(c, cur);
    code.push_back({n->op, n->op == Op::kPi ? std::numbers::pi : n->value, n->exponent});
    cur += 1 - static_cast<int>(n->args.size());
    depth = std::max(depth, cur);
  }

  double run(double x, double y) const {
    constexpr int kInline = 64;
    double inline_stack[kInline] = {};
    std::vector<double> heap;
    double* s = inline_stack;
    if (depth > kInline) {
      heap.resize(depth);
      s = heap.data();
    }
    int top = -1;
    for (const Instr& in : code) {
      switch (in.op) {
        case Op::kConst:
        case Op::kPi: s[++top] = in.value; break;
        case Op::kX: s[++top] = x; break;
        case Op::kY: s[++top] = y; break;
        case Op::kAdd: s[top - 1] += s[top]; --top; break;
        case Op::kSub: s[top - 1] -= s[top]; --top; break;
        case Op::kMul: s[top - 1] *= s[top]; --top; break;
        case Op::kDiv: s[top - 1] /= s[top]; --top; break;
        case Op::kNeg: s[top] = -s[top]; break;
        case Op::kPow: {
          const double b = s[top];
          int e = in.exponent;
          double r = 1.0;
          double p = e < 0 ? 1.0 / b : b;
          e = std::abs(e);
          while (e) {
            if (e & 1) r *= p;
            p *= p;
            e >>= 1;
          }
          s[top] = r;
          break;
        }
        case Op::kSin: s[top] = std::sin(s[top]); break;
        case Op::kCos: s[top] = std::cos(s[top]); break;
        case Op::kExp: s[top] = std::exp(s[top]); break;
        case Op::kLog: s[top] = s[top] > 0.0 ? std::log(s[top]) : std::nan(""); break;
        case Op::kSqrt: s[top] = s[top] >= 0.0 ? std::sqrt(s[top]) : std::nan(""); break;
        case Op::kAbs: s[top] = std::abs(s[top]); break;
        case Op::kMin: s[top - 1] = std::min(s[top - 1], s[top]); --top; break;
        case Op::kMax: s[top - 1] = std::max(s[top - 1], s[top]); --top; break;
        case Op::kPDisp: s[top] = periodic_displacement(s[top]); break;
        case Op::kIfPos:
          s[top - 2] = s[top - 2] >= 0.0 ? s[top - 1] : s[top];
          top -= 2;
          break;
        case Op::kPersq: {
          const double dx = periodic_displacement(s[top - 3] - s[top - 1]);
          const double dy = periodic_displacement(s[top - 2] - s[top]);
          top -= 3;
          s[top] = dx * dx + dy * dy;
          break;
        }
      }
    }
    return s[0];
  }
};

namespace {

std::shared_ptr<const ExprProgram> compile(const NodePtr& n) {
  auto p = std::make_shared<ExprProgram>();
  int cur = 0;
  p->emit(n, cur);
  return p;
}

}  // namespace

FieldExpr::FieldExpr() : FieldExpr(constant(0.0)) {}

FieldExpr::FieldExpr(std::shared_ptr<const ExprNode> node)
    : node_(std::move(node)), program_(compile(node_)) {}

FieldExpr FieldExpr::constant(double c) { return FieldExpr(expr::constant(c)); }
FieldExpr FieldExpr::x() { return FieldExpr(var(0)); }
FieldExpr FieldExpr::y() { return FieldExpr(var(1)); }

double FieldExpr::operator()(double x, double y) const { return program_->run(x, y); }

FieldExpr FieldExpr::derivative(int axis) const { return FieldExpr(differentiate(node_, axis)); }

std::string FieldExpr::str() const {
  std::string out;
  print(node_, out);
  return out;
}

bool FieldExpr::has_kinks() const { return contains_kink(node_); }
bool FieldExpr::is_zero() const { return is_const(node_, 0.0); }
bool FieldExpr::is_constant() const { return !depends_on_xy(node_); }

double FieldExpr::seam_defect(int samples) const {
  const FieldExpr fx = dx();
  const FieldExpr fy = dy();
  double worst = 0.0;
  auto compare = [&](double x0, double y0, double x1, double y1) {
    for (const FieldExpr* f : {this, &fx, &fy}) {
      const double a = (*f)(x0, y0);
      const double b = (*f)(x1, y1);
      const double d = std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b)));
      worst = std::max(worst, std::isfinite(d) ? d : INFINITY);
    }
  };
  for (int k = 0; k < samples; ++k) {
    const double t = static_cast<double>(k) / samples;
    compare(0.0, t, 1.0, t);
    compare(t, 0.0, t, 1.0);
  }
  return worst;
}

void FieldExpr::check_periodic(double tol) const {
  const double d = seam_defect();
  if (!(d <= tol)) {
    throw Error(ErrorCode::kPeriodicity, "expression '" + str() +
                                             "' is not periodic: seam mismatch " + format_double(d));
  }
}

PeriodicGridField FieldExpr::sample(int n) const {
  PeriodicGridField out(n, Rank::kScalar);
  const double h = 1.0 / n;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double v = (*this)(i * h, j * h);
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::kDomain, "expression '" + str() + "' is not finite at node (" +
                                            std::to_string(i) + ", " + std::to_string(j) + ")");
      }
      out(i, j) = v;
    }
  return out;
}

FieldExpr operator+(const FieldExpr& a, const FieldExpr& b) { return FieldExpr(add(a.node(), b.node())); }
FieldExpr operator-(const FieldExpr& a, const FieldExpr& b) { return FieldExpr(sub(a.node(), b.node())); }
FieldExpr operator*(const FieldExpr& a, const FieldExpr& b) { return FieldExpr(mul(a.node(), b.node())); }
FieldExpr operator/(const FieldExpr& a, const FieldExpr& b) { return FieldExpr(div(a.node(), b.node())); }
FieldExpr operator-(const FieldExpr& a) { return FieldExpr(neg(a.node())); }

}  // namespace curvlab
