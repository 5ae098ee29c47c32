#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "snic/flow.hpp"

namespace snic::expr {

enum class Fn { sin, cos, tan, atan, exp, ln, sqrt, abs };

inline const char* fn_name(Fn f) {
    static const char* names[] = {"sin", "cos", "tan", "atan", "exp", "ln", "sqrt", "abs"};
    return names[static_cast<int>(f)];
}

inline bool lookup_fn(std::string_view s, Fn& out) {
    for (int i = 0; i < 8; ++i)
        if (s == fn_name(static_cast<Fn>(i))) {
            out = static_cast<Fn>(i);
            return true;
        }
    return false;
}

inline double apply(Fn f, double v) {
    switch (f) {
    case Fn::sin: return std::sin(v);
    case Fn::cos: return std::cos(v);
    case Fn::tan: return std::tan(v);
    case Fn::atan: return std::atan(v);
    case Fn::exp: return std::exp(v);
    case Fn::ln: return std::log(v);
    case Fn::sqrt: return std::sqrt(v);
    case Fn::abs: return std::abs(v);
    }
    return 0;
}

struct Node {
    enum class Kind { num, var, param, neg, add, sub, mul, div, pow, call };
    Kind kind = Kind::num;
    double value = 0;   // num
    int index = 0;      // var: 0 = x, 1 = y; param: slot
    std::string name;   // var/param
    Fn fn = Fn::sin;    // call
    std::unique_ptr<Node> lhs, rhs;

    bool equals(const Node& o) const {
        if (kind != o.kind) return false;
        switch (kind) {
        case Kind::num: return value == o.value;
        case Kind::var:
        case Kind::param: return name == o.name;
        case Kind::call:
            if (fn != o.fn) return false;
            break;
        default: break;
        }
        auto eq = [](const std::unique_ptr<Node>& a, const std::unique_ptr<Node>& b) {
            if (!a || !b) return !a && !b;
            return a->equals(*b);
        };
        return eq(lhs, o.lhs) && eq(rhs, o.rhs);
    }
};

using NodePtr = std::unique_ptr<Node>;

// fully parenthesised, round-trips through parse
inline std::string print(const Node& n) {
    using K = Node::Kind;
    switch (n.kind) {
    case K::num: {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", n.value);
        return buf;
    }
    case K::var:
    case K::param: return n.name;
    case K::neg: return "(-" + print(*n.lhs) + ")";
    case K::call: return std::string(fn_name(n.fn)) + "(" + print(*n.lhs) + ")";
    default: break;
    }
    const char* op = n.kind == K::add ? "+" : n.kind == K::sub ? "-" : n.kind == K::mul ? "*" : n.kind == K::div ? "/" : "^";
    return "(" + print(*n.lhs) + op + print(*n.rhs) + ")";
}

class Parser {
public:
    Parser(std::string_view src, const std::vector<std::string>& params) : s_(src), params_(params) {}

    NodePtr parse() {
        NodePtr n = expr();
        skip();
        if (pos_ != s_.size()) throw SyntaxError("unexpected '" + std::string(1, s_[pos_]) + "'", pos_);
        return n;
    }

private:
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
    static NodePtr bin(Node::Kind k, NodePtr a, NodePtr b) {
        auto n = std::make_unique<Node>();
        n->kind = k;
        n->lhs = std::move(a);
        n->rhs = std::move(b);
        return n;
    }

    NodePtr expr() {
        NodePtr n = term();
        while (true) {
            if (eat('+')) n = bin(Node::Kind::add, std::move(n), term());
            else if (eat('-')) n = bin(Node::Kind::sub, std::move(n), term());
            else return n;
        }
    }
    NodePtr term() {
        NodePtr n = unary();
        while (true) {
            if (eat('*')) n = bin(Node::Kind::mul, std::move(n), unary());
            else if (eat('/')) n = bin(Node::Kind::div, std::move(n), unary());
            else return n;
        }
    }
    NodePtr unary() {
        if (eat('-')) {
            auto n = std::make_unique<Node>();
            n->kind = Node::Kind::neg;
            n->lhs = unary();
            return n;
        }
        if (eat('+')) return unary();
        return power();
    }
    // right associative; the exponent may carry its own sign
    NodePtr power() {
        NodePtr base = primary();
        if (eat('^')) return bin(Node::Kind::pow, std::move(base), unary());
        return base;
    }
    NodePtr primary() {
        skip();
        if (pos_ >= s_.size()) throw SyntaxError("unexpected end of input", pos_);
        char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            NodePtr n = expr();
            if (!eat(')')) throw SyntaxError("expected ')'", pos_);
            return n;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
        throw SyntaxError("unexpected '" + std::string(1, c) + "'", pos_);
    }
    NodePtr number() {
        std::size_t start = pos_;
        while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.')) ++pos_;
        if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
            std::size_t save = pos_++;
            if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) ++pos_;
            if (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
                while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
            } else {
                pos_ = save;
            }
        }
        std::string tok(s_.substr(start, pos_ - start));
        char* end = nullptr;
        double v = std::strtod(tok.c_str(), &end);
        if (end != tok.c_str() + tok.size() || tok == ".") throw SyntaxError("malformed number '" + tok + "'", start);
        auto n = std::make_unique<Node>();
        n->kind = Node::Kind::num;
        n->value = v;
        return n;
    }
    NodePtr identifier() {
        std::size_t start = pos_;
        while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
        std::string id(s_.substr(start, pos_ - start));
        Fn fn;
        if (lookup_fn(id, fn)) {
            if (!eat('(')) throw SyntaxError("function '" + id + "' needs an argument list", pos_);
            if (eat(')')) throw SyntaxError("arity error: '" + id + "' takes 1 argument, got 0", pos_ - 1);
            NodePtr arg = expr();
            int count = 1;
            while (eat(',')) {
                expr();
                ++count;
            }
            if (count != 1)
                throw SyntaxError("arity error: '" + id + "' takes 1 argument, got " + std::to_string(count), start);
            if (!eat(')')) throw SyntaxError("expected ')'", pos_);
            auto n = std::make_unique<Node>();
            n->kind = Node::Kind::call;
            n->fn = fn;
            n->lhs = std::move(arg);
            return n;
        }
        auto n = std::make_unique<Node>();
        n->name = id;
        if (id == "x" || id == "y") {
            n->kind = Node::Kind::var;
            n->index = id == "x" ? 0 : 1;
        } else {
            auto it = std::find(params_.begin(), params_.end(), id);
            if (it == params_.end()) throw SyntaxError("unknown identifier '" + id + "'", start);
            n->kind = Node::Kind::param;
            n->index = static_cast<int>(it - params_.begin());
        }
        skip();
        if (pos_ < s_.size() && s_[pos_] == '(') throw SyntaxError("'" + id + "' is not a function", pos_);
        return n;
    }

    std::string_view s_;
    const std::vector<std::string>& params_;
    std::size_t pos_ = 0;
};

inline NodePtr parse(std::string_view src, const std::vector<std::string>& params = {}) {
    return Parser(src, params).parse();
}

// straight-line postfix program
class Program {
public:
    Program() = default;
    explicit Program(const Node& root) { emit(root); }

    double run(double x, double y, const double* params) const {
        double st[64] = {};
        int sp = 0;
        std::vector<double> big;
        double* s = st;
        if (depth_ > 64) {
            big.resize(static_cast<std::size_t>(depth_));
            s = big.data();
        }
        for (const Op& op : code_) {
            switch (op.code) {
            case Code::num: s[sp++] = op.value; break;
            case Code::x: s[sp++] = x; break;
            case Code::y: s[sp++] = y; break;
            case Code::param: s[sp++] = params[op.index]; break;
            case Code::neg: s[sp - 1] = -s[sp - 1]; break;
            case Code::add: --sp, s[sp - 1] = s[sp - 1] + s[sp]; break;
            case Code::sub: --sp, s[sp - 1] = s[sp - 1] - s[sp]; break;
            case Code::mul: --sp, s[sp - 1] = s[sp - 1] * s[sp]; break;
            case Code::div: --sp, s[sp - 1] = s[sp - 1] / s[sp]; break;
            case Code::pow: --sp, s[sp - 1] = std::pow(s[sp - 1], s[sp]); break;
            case Code::call: s[sp - 1] = apply(op.fn, s[sp - 1]); break;
            }
        }
        return s[0];
    }

private:
    enum class Code { num, x, y, param, neg, add, sub, mul, div, pow, call };
    struct Op {
        Code code;
        double value = 0;
        int index = 0;
        Fn fn = Fn::sin;
    };

    void emit(const Node& n) {
        using K = Node::Kind;
        switch (n.kind) {
        case K::num: push({Code::num, n.value}); return;
        case K::var: push({n.index == 0 ? Code::x : Code::y}); return;
        case K::param: push({Code::param, 0, n.index}); return;
        case K::neg: emit(*n.lhs); code_.push_back({Code::neg}); return;
        case K::call: emit(*n.lhs); code_.push_back({Code::call, 0, 0, n.fn}); return;
        default: break;
        }
        emit(*n.lhs);
        emit(*n.rhs);
        Code c = n.kind == K::add ? Code::add : n.kind == K::sub ? Code::sub : n.kind == K::mul ? Code::mul
               : n.kind == K::div ? Code::div : Code::pow;
        code_.push_back({c});
        --sp_;
    }
    void push(Op op) {
        code_.push_back(op);
        depth_ = std::max(depth_, ++sp_);
    }

    std::vector<Op> code_;
    int sp_ = 0, depth_ = 0;
};

// reference evaluator straight off the tree
inline double eval_tree(const Node& n, double x, double y, const double* params) {
    using K = Node::Kind;
    switch (n.kind) {
    case K::num: return n.value;
    case K::var: return n.index == 0 ? x : y;
    case K::param: return params[n.index];
    case K::neg: return -eval_tree(*n.lhs, x, y, params);
    case K::add: return eval_tree(*n.lhs, x, y, params) + eval_tree(*n.rhs, x, y, params);
    case K::sub: return eval_tree(*n.lhs, x, y, params) - eval_tree(*n.rhs, x, y, params);
    case K::mul: return eval_tree(*n.lhs, x, y, params) * eval_tree(*n.rhs, x, y, params);
    case K::div: return eval_tree(*n.lhs, x, y, params) / eval_tree(*n.rhs, x, y, params);
    case K::pow: return std::pow(eval_tree(*n.lhs, x, y, params), eval_tree(*n.rhs, x, y, params));
    case K::call: return apply(n.fn, eval_tree(*n.lhs, x, y, params));
    }
    return 0;
}

struct FieldExpr {
    std::string source_x, source_y;
    std::vector<std::string> names;
    std::vector<double> values;
    std::shared_ptr<const Node> ast_x, ast_y;
    Program prog_x, prog_y;

    Vec2 eval(const Vec2& s) const { return {prog_x.run(s.x, s.y, values.data()), prog_y.run(s.x, s.y, values.data())}; }

    PlanarField field(const std::string& name = "expr") const {
        ParamSchema schema;
        for (std::size_t i = 0; i < names.size(); ++i) schema.emplace_back(names[i], values[i]);
        auto px = std::make_shared<Program>(prog_x);
        auto py = std::make_shared<Program>(prog_y);
        std::vector<std::string> order = names;
        return PlanarField(name, schema, [px, py, order](const Params& p) {
            auto vals = std::make_shared<std::vector<double>>();
            for (auto& k : order) vals->push_back(p.at(k));
            Kernel k;
            k.f = [px, py, vals](const Vec2& s) {
                return Vec2{px->run(s.x, s.y, vals->data()), py->run(s.x, s.y, vals->data())};
            };
            return k;
        });
    }
};

inline FieldExpr parse_field(const std::string& sx, const std::string& sy, const Params& params) {
    FieldExpr fe;
    fe.source_x = sx, fe.source_y = sy;
    for (auto& [k, v] : params) {
        if (k == "x" || k == "y") throw ParameterError("parameter name '" + k + "' clashes with a state variable");
        Fn dummy;
        if (lookup_fn(k, dummy)) throw ParameterError("parameter name '" + k + "' clashes with a function");
        fe.names.push_back(k);
        fe.values.push_back(v);
    }
    NodePtr ax = parse(sx, fe.names);
    NodePtr ay = parse(sy, fe.names);
    fe.prog_x = Program(*ax);
    fe.prog_y = Program(*ay);
    fe.ast_x = std::shared_ptr<const Node>(std::move(ax));
    fe.ast_y = std::shared_ptr<const Node>(std::move(ay));
    return fe;
}

}  // namespace snic::expr
