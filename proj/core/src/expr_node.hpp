#pragma once

#include <memory>
#include <vector>

#include "curvlab/expr.hpp"

namespace curvlab {

enum class Op {
  kConst,
  kPi,
  kX,
  kY,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kNeg,
  kPow,
  kSin,
  kCos,
  kExp,
  kLog,
  kAbs,
  kSqrt,
  kMin,
  kMax,
  kPersq,
  kIfPos,  // ifpos(c, p, q) = c >= 0 ? p : q
  kPDisp,  // z - floor(z + 1/2)
};

using NodePtr = std::shared_ptr<const ExprNode>;

struct ExprNode {
  Op op = Op::kConst;
  double value = 0.0;
  int exponent = 0;
  std::vector<NodePtr> args;
};

namespace expr {

NodePtr constant(double c);
NodePtr pi();
NodePtr var(int axis);
NodePtr add(NodePtr a, NodePtr b);
NodePtr sub(NodePtr a, NodePtr b);
NodePtr mul(NodePtr a, NodePtr b);
NodePtr div(NodePtr a, NodePtr b);
NodePtr neg(NodePtr a);
NodePtr pow(NodePtr a, int n);
NodePtr call(Op op, std::vector<NodePtr> args);

int arity(Op op);

}  // namespace expr
}  // namespace curvlab
