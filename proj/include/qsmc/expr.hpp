#pragma once

// Minimal arithmetic-expression evaluator used by the "custom" model key.
// Grammar (standard precedence; '^' associates right and binds tighter than
// unary minus, so -x^2 means -(x^2) as in Python/R/Fortran — log-density
// strings like "exp(-x^2/2)" read the way they are written):
//
//   expr    := term  (('+'|'-') term)*
//   term    := unary (('*'|'/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?
//   primary := number | variable | func '(' expr ')' | '(' expr ')'
//
// Variables: `x` (first coordinate) or `x1`..`x9`.  Functions: exp, log, sqrt.
// Expressions compile to a flat postfix program evaluated without allocation,
// so compiled expressions are cheap to call and safe to copy across workers.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "common.hpp"

namespace qsmc {

class Expr {
  public:
    Expr() = default;

    // Evaluation uses a fixed-size value stack on the caller's stack frame,
    // so a single compiled Expr is safe to evaluate from many workers at
    // once.  The required depth is computed at parse time and capped.
    static constexpr int kMaxDepth = 64;

    static Expr parse(const std::string& text) {
        Parser p(text);
        Expr e = p.parse_expr();
        p.skip_ws();
        if (!p.done())
            throw configuration_error("expression: trailing input at position " +
                                      std::to_string(p.pos()) + " in \"" + text + "\"");
        e.max_var_ = 0;
        int depth = 0, max_depth = 0;
        for (const Op& op : e.prog_) {
            switch (op.code) {
                case OpCode::constant:
                case OpCode::var: ++depth; break;
                case OpCode::add:
                case OpCode::sub:
                case OpCode::mul:
                case OpCode::div:
                case OpCode::pow: --depth; break;
                default: break;  // unary ops keep the depth
            }
            max_depth = std::max(max_depth, depth);
            if (op.code == OpCode::var && op.index + 1 > e.max_var_) e.max_var_ = op.index + 1;
        }
        if (max_depth > kMaxDepth)
            throw configuration_error("expression too deeply nested: \"" + text + "\"");
        e.text_ = text;
        return e;
    }

    double eval(const Vec& x) const {
        if (static_cast<int>(x.size()) < max_var_)
            throw evaluation_error("expression \"" + text_ + "\": needs " +
                                   std::to_string(max_var_) + " coordinates, got " +
                                   std::to_string(x.size()));
        return run([&x](int i) { return x[i]; });
    }

    // Scalar fast path for 1-d models: no Vec allocation per call.
    double eval1(double x) const {
        if (max_var_ > 1)
            throw evaluation_error("expression \"" + text_ + "\": needs " +
                                   std::to_string(max_var_) + " coordinates, got a scalar");
        return run([x](int) { return x; });
    }

    const std::string& text() const { return text_; }
    int arity() const { return max_var_; }

  private:
    enum class OpCode { constant, var, neg, add, sub, mul, div, pow, fexp, flog, fsqrt };
    struct Op {
        OpCode code;
        double value = 0.0;
        int index = 0;
    };

    std::vector<Op> prog_;
    int max_var_ = 0;
    std::string text_;

    template <class VarAt>
    double run(VarAt&& var_at) const {
        double st[kMaxDepth];
        std::size_t top = 0;
        for (const Op& op : prog_) {
            switch (op.code) {
                case OpCode::constant: st[top++] = op.value; break;
                case OpCode::var: st[top++] = var_at(op.index); break;
                case OpCode::neg: st[top - 1] = -st[top - 1]; break;
                case OpCode::add: --top; st[top - 1] += st[top]; break;
                case OpCode::sub: --top; st[top - 1] -= st[top]; break;
                case OpCode::mul: --top; st[top - 1] *= st[top]; break;
                case OpCode::div: --top; st[top - 1] /= st[top]; break;
                case OpCode::pow: --top; st[top - 1] = std::pow(st[top - 1], st[top]); break;
                case OpCode::fexp: st[top - 1] = std::exp(st[top - 1]); break;
                case OpCode::flog: st[top - 1] = std::log(st[top - 1]); break;
                case OpCode::fsqrt: st[top - 1] = std::sqrt(st[top - 1]); break;
            }
        }
        return st[0];
    }

    void emit(OpCode c, double v = 0.0, int idx = 0) { prog_.push_back({c, v, idx}); }

    class Parser {
      public:
        explicit Parser(const std::string& s) : s_(s) {}

        Expr parse_expr() {
            Expr e;
            parse_sum(e);
            return e;
        }
        void skip_ws() {
            while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
        }
        bool done() const { return i_ >= s_.size(); }
        std::size_t pos() const { return i_; }

      private:
        const std::string& s_;
        std::size_t i_ = 0;

        [[noreturn]] void fail(const std::string& what) {
            throw configuration_error("expression: " + what + " at position " +
                                      std::to_string(i_) + " in \"" + s_ + "\"");
        }
        bool peek(char c) {
            skip_ws();
            return i_ < s_.size() && s_[i_] == c;
        }
        bool accept(char c) {
            if (!peek(c)) return false;
            ++i_;
            return true;
        }

        void parse_sum(Expr& e) {
            parse_term(e);
            for (;;) {
                if (accept('+')) { parse_term(e); e.emit(OpCode::add); }
                else if (accept('-')) { parse_term(e); e.emit(OpCode::sub); }
                else return;
            }
        }
        void parse_term(Expr& e) {
            parse_unary(e);
            for (;;) {
                if (accept('*')) { parse_unary(e); e.emit(OpCode::mul); }
                else if (accept('/')) { parse_unary(e); e.emit(OpCode::div); }
                else return;
            }
        }
        void parse_unary(Expr& e) {
            if (accept('-')) {
                parse_unary(e);
                e.emit(OpCode::neg);
                return;
            }
            parse_power(e);
        }
        void parse_power(Expr& e) {
            parse_primary(e);
            if (accept('^')) {
                parse_unary(e);  // right-associative; exponent may be signed
                e.emit(OpCode::pow);
            }
        }
        void parse_primary(Expr& e) {
            skip_ws();
            if (i_ >= s_.size()) fail("unexpected end of input");
            const char c = s_[i_];
            if (c == '(') {
                ++i_;
                parse_sum(e);
                if (!accept(')')) fail("expected ')'");
                return;
            }
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
                std::size_t used = 0;
                double v;
                try {
                    v = std::stod(s_.substr(i_), &used);
                } catch (const std::exception&) {
                    fail("malformed number");
                }
                i_ += used;
                e.emit(OpCode::constant, v);
                return;
            }
            if (std::isalpha(static_cast<unsigned char>(c))) {
                std::size_t j = i_;
                while (j < s_.size() &&
                       (std::isalnum(static_cast<unsigned char>(s_[j])) || s_[j] == '_'))
                    ++j;
                const std::string name = s_.substr(i_, j - i_);
                i_ = j;
                if (name == "x") { e.emit(OpCode::var, 0.0, 0); return; }
                if (name.size() == 2 && name[0] == 'x' && name[1] >= '1' && name[1] <= '9') {
                    e.emit(OpCode::var, 0.0, name[1] - '1');
                    return;
                }
                OpCode fn;
                if (name == "exp") fn = OpCode::fexp;
                else if (name == "log") fn = OpCode::flog;
                else if (name == "sqrt") fn = OpCode::fsqrt;
                else fail("unknown identifier '" + name + "'");
                if (!accept('(')) fail("expected '(' after function name");
                parse_sum(e);
                if (!accept(')')) fail("expected ')'");
                e.emit(fn);
                return;
            }
            fail(std::string("unexpected character '") + c + "'");
        }
    };
};

}  // namespace qsmc
