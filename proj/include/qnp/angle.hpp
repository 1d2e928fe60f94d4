#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace qnp {

using VarStore = std::map<std::string, double>;

/// Linear angle expression: constant + sum of coeff * variable.
/// This is the only classical arithmetic programs can express; it is
/// enough for summed rotation angles and measurement-feedforward terms.
struct AngleExpr {
    struct Term {
        double coeff = 1.0;
        std::string var;
        bool operator==(const Term&) const = default;
    };

    double constant = 0.0;
    std::vector<Term> terms;

    AngleExpr() = default;
    explicit AngleExpr(double c) : constant(c) {}

    static AngleExpr variable(const std::string& name, double coeff = 1.0) {
        AngleExpr e;
        e.terms.push_back({coeff, name});
        return e;
    }

    bool is_constant() const { return terms.empty(); }

    AngleExpr& add(double coeff, const std::string& var) {
        terms.push_back({coeff, var});
        return *this;
    }

    AngleExpr operator+(const AngleExpr& o) const {
        AngleExpr r = *this;
        r.constant += o.constant;
        r.terms.insert(r.terms.end(), o.terms.begin(), o.terms.end());
        return r;
    }

    /// Evaluates against a variable store. Returns nullopt if any
    /// referenced variable is undefined.
    std::optional<double> eval(const VarStore& vars) const;

    /// Variables referenced by this expression.
    std::vector<std::string> free_vars() const;

    std::string to_string() const;
    static std::optional<AngleExpr> parse(const std::string& text);

    bool operator==(const AngleExpr&) const = default;
};

}  // namespace qnp
