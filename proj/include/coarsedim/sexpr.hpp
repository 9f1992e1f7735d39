#pragma once

#include <charconv>
#include <string>
#include <string_view>
#include <vector>

#include "generator.hpp"

namespace coarsedim {

// ======================================================
// Generator config grammar
// ======================================================
//
//   expr     := "(" head args ")"
//   head     := integers | powersplusindex | reciprocals | explicit | ap
//             | cantor | union | scale | translate | product | power
//             | linear-image | difference
//   args     := numbers, exprs, or parenthesized points, per head
//
// Examples: (integers)         (power (integers) 2)
//           (explicit 0 1 3)   (explicit (0 0) (1 2))
//           (scale (ap 0 1) 0.5)
//           (linear-image (power (integers) 2) 1 1.4142135623730951)

namespace sexpr_detail {

struct Node {
    bool is_atom = false;
    std::string atom;
    std::vector<Node> items;
};

struct Parser {
    std::string_view s;
    std::size_t pos = 0;

    void skip_ws() {
        while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t' || s[pos] == '\n' || s[pos] == '\r')) ++pos;
    }

    Node parse() {
        skip_ws();
        if (pos >= s.size()) throw InputError("sexpr: unexpected end of input");
        if (s[pos] == '(') {
            ++pos;
            Node n;
            while (true) {
                skip_ws();
                if (pos >= s.size()) throw InputError("sexpr: missing ')'");
                if (s[pos] == ')') {
                    ++pos;
                    return n;
                }
                n.items.push_back(parse());
            }
        }
        if (s[pos] == ')') throw InputError("sexpr: unexpected ')'");
        Node n;
        n.is_atom = true;
        const std::size_t start = pos;
        while (pos < s.size() && s[pos] != ' ' && s[pos] != '\t' && s[pos] != '\n' && s[pos] != '\r' &&
               s[pos] != '(' && s[pos] != ')')
            ++pos;
        n.atom = std::string(s.substr(start, pos - start));
        return n;
    }
};

inline double atom_number(const Node& n) {
    if (!n.is_atom) throw InputError("sexpr: expected a number");
    double v = 0.0;
    const char* b = n.atom.data();
    const char* e = b + n.atom.size();
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc{} || p != e) throw InputError("sexpr: bad number '" + n.atom + "'");
    return v;
}

inline long long atom_integer(const Node& n) {
    if (!n.is_atom) throw InputError("sexpr: expected an integer");
    long long v = 0;
    const char* b = n.atom.data();
    const char* e = b + n.atom.size();
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc{} || p != e) throw InputError("sexpr: bad integer '" + n.atom + "'");
    return v;
}

inline GenPtr build(const Node& n);

inline std::vector<double> number_args(const Node& n, std::size_t from) {
    std::vector<double> out;
    for (std::size_t i = from; i < n.items.size(); ++i) out.push_back(atom_number(n.items[i]));
    return out;
}

inline GenPtr build(const Node& n) {
    if (n.is_atom) throw InputError("sexpr: generator must be a parenthesized form");
    if (n.items.empty() || !n.items[0].is_atom) throw InputError("sexpr: missing generator head");
    const std::string& head = n.items[0].atom;
    const std::size_t argc = n.items.size() - 1;

    auto expect = [&](std::size_t k) {
        if (argc != k)
            throw InputError("sexpr: (" + head + ") expects " + std::to_string(k) + " argument(s)");
    };

    if (head == "integers") { expect(0); return SetGenerator::integers(); }
    if (head == "powersplusindex") { expect(0); return SetGenerator::powers_plus_index(); }
    if (head == "reciprocals") { expect(0); return SetGenerator::reciprocals(); }
    if (head == "explicit") {
        if (argc == 0) throw InputError("sexpr: (explicit) needs at least one point");
        if (n.items[1].is_atom) {
            return SetGenerator::explicit_list(1, number_args(n, 1));
        }
        // parenthesized points, all the same dimension
        const std::size_t d = n.items[1].items.size();
        if (d == 0 || d > 8) throw InputError("sexpr: explicit point dimension out of range");
        std::vector<double> flat;
        for (std::size_t i = 1; i < n.items.size(); ++i) {
            const Node& pt = n.items[i];
            if (pt.is_atom || pt.items.size() != d)
                throw InputError("sexpr: explicit points must share one dimension");
            for (const Node& c : pt.items) flat.push_back(atom_number(c));
        }
        return SetGenerator::explicit_list(static_cast<int>(d), std::move(flat));
    }
    if (head == "ap" || head == "arithmetic-progression") {
        expect(2);
        return SetGenerator::arithmetic_progression(atom_number(n.items[1]), atom_number(n.items[2]));
    }
    if (head == "cantor") {
        expect(2);
        return SetGenerator::cantor_like(atom_number(n.items[1]), atom_integer(n.items[2]));
    }
    if (head == "union") {
        std::vector<GenPtr> cs;
        for (std::size_t i = 1; i < n.items.size(); ++i) cs.push_back(build(n.items[i]));
        return SetGenerator::union_of(std::move(cs));
    }
    if (head == "scale") {
        expect(2);
        return SetGenerator::scaled(build(n.items[1]), atom_number(n.items[2]));
    }
    if (head == "translate") {
        if (argc < 2) throw InputError("sexpr: (translate child v...) needs child and offset");
        return SetGenerator::translated(build(n.items[1]), number_args(n, 2));
    }
    if (head == "product") {
        std::vector<GenPtr> cs;
        for (std::size_t i = 1; i < n.items.size(); ++i) cs.push_back(build(n.items[i]));
        return SetGenerator::product_of(std::move(cs));
    }
    if (head == "power") {
        expect(2);
        return SetGenerator::power_of(build(n.items[1]), atom_integer(n.items[2]));
    }
    if (head == "linear-image") {
        if (argc < 2) throw InputError("sexpr: (linear-image child c...) needs child and coefficients");
        return SetGenerator::linear_image_of(build(n.items[1]), number_args(n, 2));
    }
    if (head == "difference") {
        expect(2);
        return SetGenerator::difference_of(build(n.items[1]), build(n.items[2]));
    }
    throw InputError("sexpr: unknown generator head '" + head + "'");
}

}  // namespace sexpr_detail

inline GenPtr parse_generator(std::string_view text) {
    sexpr_detail::Parser p{text};
    auto node = p.parse();
    p.skip_ws();
    if (p.pos != text.size()) throw InputError("sexpr: trailing characters after generator");
    return sexpr_detail::build(node);
}

// ======================================================
// Printing (canonical, round-trips through parse_generator)
// ======================================================

inline std::string to_sexpr(const SetGenerator& g) {
    using Kind = SetGenerator::Kind;
    std::string out = "(";
    out += kind_name(g.kind);
    switch (g.kind) {
        case Kind::integers:
        case Kind::powers_plus_index:
        case Kind::reciprocals:
            break;
        case Kind::explicit_list: {
            const int d = g.ambient_dim;
            const std::size_t n = g.numbers.size() / static_cast<std::size_t>(d);
            for (std::size_t i = 0; i < n; ++i) {
                if (d == 1) {
                    out += " " + format_double(g.numbers[i]);
                } else {
                    out += " (";
                    for (int k = 0; k < d; ++k) {
                        if (k) out += " ";
                        out += format_double(g.numbers[i * static_cast<std::size_t>(d) + static_cast<std::size_t>(k)]);
                    }
                    out += ")";
                }
            }
            break;
        }
        case Kind::arithmetic_progression:
        case Kind::translate:
        case Kind::linear_image:
            if (g.kind != Kind::arithmetic_progression) out += " " + to_sexpr(*g.children[0]);
            for (double v : g.numbers) out += " " + format_double(v);
            break;
        case Kind::cantor_like:
            out += " " + format_double(g.numbers[0]) + " " + std::to_string(g.int_param);
            break;
        case Kind::union_set:
        case Kind::product:
            for (const auto& c : g.children) out += " " + to_sexpr(*c);
            break;
        case Kind::scale:
            out += " " + to_sexpr(*g.children[0]) + " " + format_double(g.numbers[0]);
            break;
        case Kind::power:
            out += " " + to_sexpr(*g.children[0]) + " " + std::to_string(g.int_param);
            break;
        case Kind::difference:
            out += " " + to_sexpr(*g.children[0]) + " " + to_sexpr(*g.children[1]);
            break;
    }
    out += ")";
    return out;
}

inline std::string to_sexpr(const GenPtr& g) { return to_sexpr(*g); }

}  // namespace coarsedim
