#include "kssc/expression.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <vector>

namespace kssc {

namespace {

class Parser {
public:
    Parser(const std::string& text, const Bindings& bindings) : text_(normalize(text)), bindings_(bindings) {}

    double parse() {
        const double v = sum();
        skip();
        if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
        return v;
    }

private:
    static std::string normalize(const std::string& s) {
        std::string out;
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s.compare(i, 2, "\xC2\xB7") == 0) {
                out += '*';
                ++i;
            } else {
                out += s[i];
            }
        }
        return out;
    }

    [[noreturn]] void fail(const std::string& why) const {
        throw ValidationError("expression '" + text_ + "': " + why + " at offset " + std::to_string(pos_));
    }

    void skip() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool eat(char c) {
        skip();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    double sum() {
        double v = product();
        for (;;) {
            if (eat('+')) v += product();
            else if (eat('-')) v -= product();
            else return v;
        }
    }

    double product() {
        double v = unary();
        for (;;) {
            if (eat('*')) {
                v *= unary();
            } else if (eat('/')) {
                const double den = unary();
                if (den == 0) fail("division by zero");
                v /= den;
            } else {
                return v;
            }
        }
    }

    double unary() {
        if (eat('-')) return -unary();
        if (eat('+')) return unary();
        return primary();
    }

    double primary() {
        skip();
        if (pos_ >= text_.size()) fail("unexpected end");
        if (eat('(')) {
            const double v = sum();
            if (!eat(')')) fail("expected ')'");
            return v;
        }
        const char c = text_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            std::size_t used = 0;
            const double v = std::stod(text_.substr(pos_), &used);
            pos_ += used;
            return v;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            const std::size_t begin = pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
                ++pos_;
            const std::string name = text_.substr(begin, pos_ - begin);
            if (eat('(')) return call(name);
            const auto it = bindings_.find(name);
            if (it == bindings_.end()) fail("unknown identifier '" + name + "'");
            return it->second;
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }

    double call(const std::string& name) {
        std::vector<double> args{sum()};
        while (eat(',')) args.push_back(sum());
        if (!eat(')')) fail("expected ')'");
        if (name == "min" || name == "max") {
            double v = args[0];
            for (double a : args) v = name == "min" ? std::min(v, a) : std::max(v, a);
            return v;
        }
        if (args.size() != 1) fail(name + " takes one argument");
        if (name == "floor") return std::floor(args[0]);
        if (name == "ceil") return std::ceil(args[0]);
        fail("unknown function '" + name + "'");
    }

    std::string text_;
    const Bindings& bindings_;
    std::size_t pos_ = 0;
};

}  // namespace

double evaluate_expression(const std::string& text, const Bindings& bindings) {
    return Parser(text, bindings).parse();
}

Index evaluate_k_rule(const std::string& rule, const Bindings& bindings, Index n) {
    if (n < 2) throw ValidationError("k rule needs at least two points");
    const double v = evaluate_expression(rule, bindings);
    if (!std::isfinite(v)) throw ValidationError("k rule '" + rule + "' is not finite");
    return std::clamp<Index>(static_cast<Index>(std::floor(v)), 1, n - 1);
}

}  // namespace kssc
