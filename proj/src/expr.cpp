#include "dglue/expr.hpp"

#include "dglue/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>

namespace dglue {

struct Expr::Node {
    ExprKind kind;
    double value = 0.0; // kConstant
    int exponent = 0;   // kPower
    std::shared_ptr<const Node> a, b;
    bool has_abs = false;
    bool has_recip = false;
};

namespace {

std::shared_ptr<Expr::Node> make_node(ExprKind k) {
    auto n = std::make_shared<Expr::Node>();
    n->kind = k;
    return n;
}

} // namespace

Expr::Expr() : Expr(constant(0.0)) {}

Expr Expr::constant(double v) {
    auto n = make_node(ExprKind::kConstant);
    n->value = v;
    return Expr(std::move(n));
}

Expr Expr::variable() {
    static const Expr x = Expr(make_node(ExprKind::kVariable));
    return x;
}

ExprKind Expr::kind() const { return node_->kind; }

double Expr::constant_value() const {
    if (node_->kind != ExprKind::kConstant) fail("InternalError", "not a constant node");
    return node_->value;
}

int Expr::exponent() const {
    if (node_->kind != ExprKind::kPower) fail("InternalError", "not a power node");
    return node_->exponent;
}

int Expr::child_count() const {
    if (node_->b) return 2;
    if (node_->a) return 1;
    return 0;
}

Expr Expr::child(int i) const {
    if (i == 0 && node_->a) return Expr(node_->a);
    if (i == 1 && node_->b) return Expr(node_->b);
    fail("InternalError", "child index out of range");
}

bool Expr::has_abs() const { return node_->has_abs; }
bool Expr::has_reciprocal() const { return node_->has_recip; }

bool Expr::is_zero() const {
    return node_->kind == ExprKind::kConstant && node_->value == 0.0;
}

namespace {

bool is_const(const Expr& e, double v) {
    return e.kind() == ExprKind::kConstant && e.constant_value() == v;
}

} // namespace

Expr operator+(const Expr& a, const Expr& b) {
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    if (a.kind() == ExprKind::kConstant && b.kind() == ExprKind::kConstant)
        return Expr::constant(a.constant_value() + b.constant_value());
    auto n = make_node(ExprKind::kAdd);
    n->a = a.node_;
    n->b = b.node_;
    n->has_abs = a.node_->has_abs || b.node_->has_abs;
    n->has_recip = a.node_->has_recip || b.node_->has_recip;
    return Expr(std::move(n));
}

Expr Expr::operator-() const {
    if (kind() == ExprKind::kConstant) return constant(-constant_value());
    if (kind() == ExprKind::kNegate) return child(0);
    auto n = make_node(ExprKind::kNegate);
    n->a = node_;
    n->has_abs = node_->has_abs;
    n->has_recip = node_->has_recip;
    return Expr(std::move(n));
}

Expr operator-(const Expr& a, const Expr& b) {
    if (b.is_zero()) return a;
    return a + (-b);
}

Expr operator*(const Expr& a, const Expr& b) {
    if (a.is_zero() || b.is_zero()) return Expr::constant(0.0);
    if (is_const(a, 1.0)) return b;
    if (is_const(b, 1.0)) return a;
    if (a.kind() == ExprKind::kConstant && b.kind() == ExprKind::kConstant)
        return Expr::constant(a.constant_value() * b.constant_value());
    auto n = make_node(ExprKind::kMultiply);
    n->a = a.node_;
    n->b = b.node_;
    n->has_abs = a.node_->has_abs || b.node_->has_abs;
    n->has_recip = a.node_->has_recip || b.node_->has_recip;
    return Expr(std::move(n));
}

Expr Expr::pow(int exponent) const {
    if (exponent < 0) fail("NegativeExponent", "power exponents must be >= 0");
    if (exponent > 1000)
        fail("ExponentTooLarge", "power exponents are capped at 1000");
    if (exponent == 0) return constant(1.0);
    if (exponent == 1) return *this;
    if (kind() == ExprKind::kConstant)
        return constant(std::pow(constant_value(), exponent));
    auto n = make_node(ExprKind::kPower);
    n->exponent = exponent;
    n->a = node_;
    n->has_abs = node_->has_abs;
    n->has_recip = node_->has_recip;
    return Expr(std::move(n));
}

namespace {

// kReciprocal / kExp / kSin / kCos / kAbs share the same node shape; the
// caller has already folded the constant case.
std::shared_ptr<Expr::Node> unary_node(ExprKind k, const std::shared_ptr<const Expr::Node>& a) {
    auto n = make_node(k);
    n->a = a;
    n->has_abs = a->has_abs || k == ExprKind::kAbs;
    n->has_recip = a->has_recip || k == ExprKind::kReciprocal;
    return n;
}

} // namespace

Expr Expr::reciprocal(const Expr& denom) {
    if (denom.kind() == ExprKind::kConstant && denom.constant_value() != 0.0)
        return constant(1.0 / denom.constant_value());
    return Expr(unary_node(ExprKind::kReciprocal, denom.node_));
}

Expr Expr::exp(const Expr& u) {
    if (u.kind() == ExprKind::kConstant) return constant(std::exp(u.constant_value()));
    return Expr(unary_node(ExprKind::kExp, u.node_));
}

Expr Expr::sin(const Expr& u) {
    if (u.kind() == ExprKind::kConstant) return constant(std::sin(u.constant_value()));
    return Expr(unary_node(ExprKind::kSin, u.node_));
}

Expr Expr::cos(const Expr& u) {
    if (u.kind() == ExprKind::kConstant) return constant(std::cos(u.constant_value()));
    return Expr(unary_node(ExprKind::kCos, u.node_));
}

Expr Expr::abs(const Expr& u) {
    if (u.kind() == ExprKind::kConstant) return constant(std::fabs(u.constant_value()));
    return Expr(unary_node(ExprKind::kAbs, u.node_));
}

double Expr::eval(double x) const {
    const Node* n = node_.get();
    switch (n->kind) {
    case ExprKind::kConstant: return n->value;
    case ExprKind::kVariable: return x;
    case ExprKind::kAdd: return Expr(n->a).eval(x) + Expr(n->b).eval(x);
    case ExprKind::kNegate: return -Expr(n->a).eval(x);
    case ExprKind::kMultiply: return Expr(n->a).eval(x) * Expr(n->b).eval(x);
    case ExprKind::kPower: {
        double base = Expr(n->a).eval(x);
        double r = 1.0;
        for (int i = 0; i < n->exponent; ++i) r *= base;
        return r;
    }
    case ExprKind::kReciprocal: return 1.0 / Expr(n->a).eval(x);
    case ExprKind::kExp: return std::exp(Expr(n->a).eval(x));
    case ExprKind::kSin: return std::sin(Expr(n->a).eval(x));
    case ExprKind::kCos: return std::cos(Expr(n->a).eval(x));
    case ExprKind::kAbs: return std::fabs(Expr(n->a).eval(x));
    }
    fail("InternalError", "unknown node kind");
}

Expr Expr::derivative() const {
    const Node* n = node_.get();
    switch (n->kind) {
    case ExprKind::kConstant: return constant(0.0);
    case ExprKind::kVariable: return constant(1.0);
    case ExprKind::kAdd: return Expr(n->a).derivative() + Expr(n->b).derivative();
    case ExprKind::kNegate: return -Expr(n->a).derivative();
    case ExprKind::kMultiply: {
        Expr a(n->a), b(n->b);
        return a.derivative() * b + a * b.derivative();
    }
    case ExprKind::kPower: {
        Expr a(n->a);
        return constant(n->exponent) * a.pow(n->exponent - 1) * a.derivative();
    }
    case ExprKind::kReciprocal: {
        Expr a(n->a);
        return -(a.derivative() * reciprocal(a) * reciprocal(a));
    }
    case ExprKind::kExp: {
        Expr a(n->a);
        return exp(a) * a.derivative();
    }
    case ExprKind::kSin: {
        Expr a(n->a);
        return cos(a) * a.derivative();
    }
    case ExprKind::kCos: {
        Expr a(n->a);
        return -(sin(a) * a.derivative());
    }
    case ExprKind::kAbs: {
        // d|u| = u'·u/|u|; undefined at zeros of u, which singular-candidate
        // scans report and one_sided_derivatives probes.
        Expr a(n->a);
        return a.derivative() * a * reciprocal(abs(a));
    }
    }
    fail("InternalError", "unknown node kind");
}

Expr Expr::compose(const Expr& inner) const {
    const Node* n = node_.get();
    switch (n->kind) {
    case ExprKind::kConstant: return *this;
    case ExprKind::kVariable: return inner;
    case ExprKind::kAdd: return Expr(n->a).compose(inner) + Expr(n->b).compose(inner);
    case ExprKind::kNegate: return -Expr(n->a).compose(inner);
    case ExprKind::kMultiply:
        return Expr(n->a).compose(inner) * Expr(n->b).compose(inner);
    case ExprKind::kPower: return Expr(n->a).compose(inner).pow(n->exponent);
    case ExprKind::kReciprocal: return reciprocal(Expr(n->a).compose(inner));
    case ExprKind::kExp: return exp(Expr(n->a).compose(inner));
    case ExprKind::kSin: return sin(Expr(n->a).compose(inner));
    case ExprKind::kCos: return cos(Expr(n->a).compose(inner));
    case ExprKind::kAbs: return abs(Expr(n->a).compose(inner));
    }
    fail("InternalError", "unknown node kind");
}

namespace {

// Shortest decimal form that parses back to the same double.
std::string format_double(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

int precedence(ExprKind k) {
    switch (k) {
    case ExprKind::kAdd: return 1;
    case ExprKind::kNegate: return 2;
    case ExprKind::kMultiply: return 3;
    case ExprKind::kPower: return 4;
    default: return 5;
    }
}

void print(const Expr& e, std::ostream& os, int parent_prec) {
    const int prec = precedence(e.kind());
    const bool paren = prec < parent_prec;
    if (paren) os << '(';
    switch (e.kind()) {
    case ExprKind::kConstant: {
        double v = e.constant_value();
        if (v < 0) {
            os << '(' << format_double(v) << ')';
        } else {
            os << format_double(v);
        }
        break;
    }
    case ExprKind::kVariable: os << 'x'; break;
    case ExprKind::kAdd:
        print(e.child(0), os, prec);
        os << " + ";
        print(e.child(1), os, prec);
        break;
    case ExprKind::kNegate:
        os << '-';
        print(e.child(0), os, prec + 1);
        break;
    case ExprKind::kMultiply:
        print(e.child(0), os, prec);
        os << '*';
        print(e.child(1), os, prec);
        break;
    case ExprKind::kPower:
        print(e.child(0), os, prec + 1);
        os << '^' << e.exponent();
        break;
    case ExprKind::kReciprocal:
        os << "1/";
        print(e.child(0), os, 5);
        break;
    case ExprKind::kExp:
        os << "exp(";
        print(e.child(0), os, 0);
        os << ')';
        break;
    case ExprKind::kSin:
        os << "sin(";
        print(e.child(0), os, 0);
        os << ')';
        break;
    case ExprKind::kCos:
        os << "cos(";
        print(e.child(0), os, 0);
        os << ')';
        break;
    case ExprKind::kAbs:
        os << "abs(";
        print(e.child(0), os, 0);
        os << ')';
        break;
    }
    if (paren) os << ')';
}

} // namespace

std::string Expr::str() const {
    std::ostringstream os;
    print(*this, os, 0);
    return os.str();
}

std::vector<double> sample_grid(Interval iv, int n) {
    if (n < 2) fail("InternalError", "sample_grid needs n >= 2");
    std::vector<double> xs(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        xs[static_cast<size_t>(i)] = iv.lo + (iv.hi - iv.lo) * i / (n - 1);
    return xs;
}

namespace {

void collect_abs_arguments(const Expr& e, std::vector<Expr>& out) {
    if (e.kind() == ExprKind::kAbs) out.push_back(e.child(0));
    for (int i = 0; i < e.child_count(); ++i) collect_abs_arguments(e.child(i), out);
}

// Bisect a bracketing interval down to width ~1e-13.
double bisect_zero(const Expr& u, double lo, double hi) {
    double flo = u.eval(lo);
    for (int iter = 0; iter < 80 && hi - lo > 1e-13; ++iter) {
        double mid = 0.5 * (lo + hi);
        double fm = u.eval(mid);
        if (fm == 0.0) return mid;
        if ((flo < 0) != (fm < 0)) {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    return 0.5 * (lo + hi);
}

} // namespace

SingularSet Derivative::candidates(Interval window, int density) const {
    SingularSet out;
    for (const Expr& u : abs_arguments) {
        auto xs = sample_grid(window, std::max(2, density));
        for (size_t i = 0; i + 1 < xs.size(); ++i) {
            double f0 = u.eval(xs[i]);
            double f1 = u.eval(xs[i + 1]);
            if (f0 == 0.0) {
                out.push_back(xs[i]);
            } else if ((f0 < 0) != (f1 < 0)) {
                out.push_back(bisect_zero(u, xs[i], xs[i + 1]));
            }
        }
        if (!xs.empty() && u.eval(xs.back()) == 0.0) out.push_back(xs.back());
    }
    std::sort(out.begin(), out.end());
    SingularSet dedup;
    for (double v : out) {
        if (dedup.empty() || v - dedup.back() > kSingularResolution) dedup.push_back(v);
    }
    return dedup;
}

Derivative differentiate(const Expr& e) {
    Derivative d;
    d.expr = e.derivative();
    collect_abs_arguments(e, d.abs_arguments);
    return d;
}

SingularSet singular_candidates(const Expr& e, Interval window, int density) {
    return differentiate(e).candidates(window, density);
}

namespace {

// Richardson extrapolation of a first-order difference quotient: the error
// expands in integer powers of h, so Neville elimination with step ratio 2
// applies.
double richardson(const std::vector<double>& d) {
    std::vector<double> r = d;
    const size_t m = r.size();
    double factor = 1.0;
    for (size_t j = 1; j < m; ++j) {
        factor *= 2.0;
        for (size_t i = m - 1; i >= j; --i) {
            r[i] = (factor * r[i] - r[i - 1]) / (factor - 1.0);
            if (i == j) break;
        }
    }
    return r[m - 1];
}

} // namespace

std::pair<double, double> one_sided_derivatives(const Expr& e, double x, double h0) {
    if (!(h0 > 0)) fail("InvalidStep", "one_sided_derivatives requires h0 > 0");
    constexpr int kLevels = 5;
    std::vector<double> left(kLevels), right(kLevels);
    const double fx = e.eval(x);
    double h = h0;
    for (int i = 0; i < kLevels; ++i) {
        left[static_cast<size_t>(i)] = (fx - e.eval(x - h)) / h;
        right[static_cast<size_t>(i)] = (e.eval(x + h) - fx) / h;
        h *= 0.5;
    }
    return {richardson(left), richardson(right)};
}

bool equal_on_samples(const Expr& a, const Expr& b, std::span<const double> samples,
                      double tol) {
    if (!(tol > 0)) fail("InvalidTolerance", "equal_on_samples requires tol > 0");
    for (double x : samples) {
        if (!(std::fabs(a.eval(x) - b.eval(x)) <= tol)) return false;
    }
    return true;
}

std::vector<Expr> reciprocal_denominators(const Expr& e) {
    std::vector<Expr> out;
    struct Rec {
        static void walk(const Expr& e, std::vector<Expr>& out) {
            if (e.kind() == ExprKind::kReciprocal) out.push_back(e.child(0));
            for (int i = 0; i < e.child_count(); ++i) walk(e.child(i), out);
        }
    };
    Rec::walk(e, out);
    return out;
}

namespace {

// An even point count on a symmetric window would skip its centre, which is
// where the interesting zeros tend to sit.
int odd_count(int n) { return n % 2 == 0 ? n + 1 : n; }

} // namespace

ScanReport scan_nonvanishing(const Expr& e, Interval dom, double margin, int n) {
    ScanReport rep;
    rep.worst = std::numeric_limits<double>::infinity();
    auto xs = sample_grid(dom, odd_count(n));
    double prev = e.eval(xs.front());
    for (size_t i = 0; i < xs.size(); ++i) {
        double v = e.eval(xs[i]);
        if (std::fabs(v) < rep.worst) {
            rep.worst = std::fabs(v);
            rep.at = xs[i];
        }
        if (i > 0 && (prev < 0) != (v < 0) && prev != 0.0 && v != 0.0) {
            rep.worst = 0.0;
            rep.at = bisect_zero(e, xs[i - 1], xs[i]);
        }
        prev = v;
    }
    rep.ok = rep.worst >= margin;
    return rep;
}

ScanReport scan_positive(const Expr& e, Interval dom, double margin, int n) {
    ScanReport rep;
    rep.worst = std::numeric_limits<double>::infinity();
    for (double x : sample_grid(dom, odd_count(n))) {
        double v = e.eval(x);
        if (v < rep.worst) {
            rep.worst = v;
            rep.at = x;
        }
    }
    rep.ok = rep.worst >= margin;
    return rep;
}

ScanReport scan_constant_sign(const Expr& e, Interval dom, double margin, int n) {
    ScanReport pos = scan_positive(e, dom, margin, n);
    if (pos.ok) return pos;
    ScanReport neg = scan_positive(-e, dom, margin, n);
    if (neg.ok) {
        neg.worst = -neg.worst;
        return neg;
    }
    // report the point closest to a sign violation
    return std::fabs(pos.worst) <= std::fabs(neg.worst) ? pos : neg;
}

// ---------------------------------------------------------------------------
// Parser

namespace {

class Parser {
public:
    explicit Parser(const std::string& text) : s_(text) {}

    Expr parse() {
        Expr e = expression();
        skip_ws();
        if (pos_ != s_.size()) fail("ParseError", context("trailing input"));
        return e;
    }

private:
    Expr expression() {
        Expr e = term();
        for (;;) {
            skip_ws();
            if (consume('+')) {
                e = e + term();
            } else if (consume('-')) {
                e = e - term();
            } else {
                return e;
            }
        }
    }

    Expr term() {
        Expr e = factor();
        for (;;) {
            skip_ws();
            if (consume('*')) {
                e = e * factor();
            } else if (consume('/')) {
                e = e * Expr::reciprocal(factor());
            } else {
                return e;
            }
        }
    }

    Expr factor() {
        skip_ws();
        if (consume('-')) return -factor();
        if (consume('+')) return factor();
        return power();
    }

    Expr power() {
        Expr base = atom();
        skip_ws();
        if (consume('^')) {
            skip_ws();
            if (pos_ >= s_.size() || !std::isdigit(static_cast<unsigned char>(s_[pos_])))
                fail("ParseError", context("'^' requires a nonnegative integer literal"));
            size_t start = pos_;
            while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_])))
                ++pos_;
            std::string digits = s_.substr(start, pos_ - start);
            if (digits.size() > 4)
                fail("ParseError", context("exponent '" + digits + "' is too large"));
            return base.pow(std::atoi(digits.c_str()));
        }
        return base;
    }

    Expr atom() {
        skip_ws();
        if (pos_ >= s_.size()) fail("ParseError", context("unexpected end of input"));
        char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            Expr e = expression();
            expect(')');
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c))) {
            size_t start = pos_;
            while (pos_ < s_.size() &&
                   std::isalpha(static_cast<unsigned char>(s_[pos_])))
                ++pos_;
            std::string name = s_.substr(start, pos_ - start);
            if (name == "x") return Expr::variable();
            expect('(');
            Expr arg = expression();
            expect(')');
            if (name == "exp") return Expr::exp(arg);
            if (name == "sin") return Expr::sin(arg);
            if (name == "cos") return Expr::cos(arg);
            if (name == "abs") return Expr::abs(arg);
            fail("ParseError", context("unknown function '" + name + "'"));
        }
        fail("ParseError", context(std::string("unexpected character '") + c + "'"));
    }

    Expr number() {
        size_t start = pos_;
        while (pos_ < s_.size() &&
               (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.'))
            ++pos_;
        // exponent suffix like 1.5e-3
        if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
            size_t save = pos_;
            ++pos_;
            if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) ++pos_;
            if (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
                while (pos_ < s_.size() &&
                       std::isdigit(static_cast<unsigned char>(s_[pos_])))
                    ++pos_;
            } else {
                pos_ = save;
            }
        }
        std::string tok = s_.substr(start, pos_ - start);
        char* end = nullptr;
        double v = std::strtod(tok.c_str(), &end);
        if (end == tok.c_str() || *end != '\0')
            fail("ParseError", context("bad numeric literal '" + tok + "'"));
        return Expr::constant(v);
    }

    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_])))
            ++pos_;
    }

    bool consume(char c) {
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        skip_ws();
        if (!consume(c))
            fail("ParseError", context(std::string("expected '") + c + "'"));
    }

    std::string context(const std::string& what) const {
        return what + " at offset " + std::to_string(pos_) + " in \"" + s_ + "\"";
    }

    std::string s_;
    size_t pos_ = 0;
};

} // namespace

Expr parse_expr(const std::string& text) { return Parser(text).parse(); }

} // namespace dglue
