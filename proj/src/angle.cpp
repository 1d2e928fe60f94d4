#include "qnp/angle.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace qnp {

std::optional<double> AngleExpr::eval(const VarStore& vars) const {
    double v = constant;
    for (const auto& t : terms) {
        auto it = vars.find(t.var);
        if (it == vars.end()) return std::nullopt;
        v += t.coeff * it->second;
    }
    return v;
}

std::vector<std::string> AngleExpr::free_vars() const {
    std::vector<std::string> out;
    for (const auto& t : terms) out.push_back(t.var);
    return out;
}

std::string AngleExpr::to_string() const {
    char buf[64];
    std::string s;
    bool first = true;
    if (constant != 0.0 || terms.empty()) {
        std::snprintf(buf, sizeof buf, "%.17g", constant);
        s += buf;
        first = false;
    }
    for (const auto& t : terms) {
        double c = t.coeff;
        if (!first) {
            s += (c < 0) ? " - " : " + ";
            c = std::abs(c);
        } else if (c < 0) {
            s += "-";
            c = -c;
        }
        if (c != 1.0) {
            std::snprintf(buf, sizeof buf, "%.17g", c);
            s += buf;
            s += "*";
        }
        s += t.var;
        first = false;
    }
    return s;
}

namespace {

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

}  // namespace

std::optional<AngleExpr> AngleExpr::parse(const std::string& text) {
    AngleExpr e;
    e.constant = 0.0;
    const char* p = text.c_str();
    auto skip_ws = [&] { while (*p == ' ' || *p == '\t') ++p; };

    skip_ws();
    if (*p == '\0') return std::nullopt;
    double sign = 1.0;
    bool first = true;
    while (true) {
        skip_ws();
        if (*p == '\0') break;
        if (!first || *p == '+' || *p == '-') {
            if (*p == '+') { sign = 1.0; ++p; }
            else if (*p == '-') { sign = -1.0; ++p; }
            else if (!first) return std::nullopt;
            skip_ws();
        }
        // term: number, number*ident, or ident
        if (is_ident_start(*p)) {
            const char* start = p;
            while (is_ident(*p)) ++p;
            e.terms.push_back({sign, std::string(start, p)});
        } else {
            char* end = nullptr;
            double v = std::strtod(p, &end);
            if (end == p) return std::nullopt;
            p = end;
            skip_ws();
            if (*p == '*') {
                ++p;
                skip_ws();
                if (!is_ident_start(*p)) return std::nullopt;
                const char* start = p;
                while (is_ident(*p)) ++p;
                e.terms.push_back({sign * v, std::string(start, p)});
            } else {
                e.constant += sign * v;
            }
        }
        sign = 1.0;
        first = false;
    }
    return e;
}

}  // namespace qnp
