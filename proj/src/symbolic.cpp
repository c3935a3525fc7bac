#include "mfa/symbolic.hpp"

#include <algorithm>
#include <cmath>

namespace mfa {

Word parse_word(const std::string& digits, int alphabet) {
    if (alphabet < 2 || alphabet > 9)
        throw validation_error("parse_word: digit strings support alphabets 2..9");
    Word w;
    w.reserve(digits.size());
    for (char c : digits) {
        if (c < '1' || c > char('0' + alphabet))
            throw validation_error("parse_word: symbol out of range in \"" + digits + "\"");
        w.push_back(std::uint8_t(c - '0'));
    }
    return w;
}

std::string format_word(WordView w) {
    std::string s;
    s.reserve(w.size());
    for (std::uint8_t a : w) {
        if (a < 1 || a > 9) throw validation_error("format_word: symbol out of digit range");
        s.push_back(char('0' + a));
    }
    return s;
}

void validate_word(WordView w, int alphabet) {
    for (std::uint8_t a : w)
        if (a < 1 || int(a) > alphabet)
            throw validation_error("word symbol out of range for alphabet");
}

CylinderInterval cylinder(const BranchMap& map, WordView w) {
    if (int(w.size()) > kDepthCap) throw validation_error("cylinder: depth cap exceeded");
    validate_word(w, map.num_branches());
    CylinderInterval c;
    c.word.assign(w.begin(), w.end());
    double a = 0.0, b = 1.0, log_diam = 0.0;
    for (std::size_t j = w.size(); j-- > 0;) {
        const Branch& br = map.branch(int(w[j]) - 1);
        double na = br.inverse(a), nb = br.inverse(b);
        if (na > nb) std::swap(na, nb);
        if (br.affine) {
            log_diam += br.log_slope;
        } else if (nb - na > 1e-8) {
            log_diam = std::log(nb - na);
        } else {
            // endpoints no longer resolve the diameter: apply the local
            // contraction factor of the inverse branch at the new midpoint
            log_diam -= std::log(std::fabs(br.derivative(0.5 * (na + nb))));
        }
        a = na;
        b = nb;
    }
    c.a = a;
    c.b = b;
    c.log_diam = log_diam;
    return c;
}

Projection project(const BranchMap& map, WordView w) {
    CylinderInterval c = cylinder(map, w);
    return {c.midpoint(), 0.5 * c.diameter()};
}

double lambda_tilde(const BranchMap& map, WordView w, int n) {
    if (n < 1 || n > int(w.size())) throw validation_error("lambda_tilde: bad n");
    return -cylinder(map, w.first(std::size_t(n))).log_diam / n;
}

Word itinerary(const BranchMap& map, double x, int n) {
    if (n < 0) throw validation_error("itinerary: negative length");
    Word w;
    w.reserve(std::size_t(n));
    for (int k = 1; k <= n; ++k) {
        auto i = map.branch_index_of(x);
        if (!i) throw escape_error("itinerary: orbit escaped the branch domains", k);
        w.push_back(std::uint8_t(*i + 1));
        x = map.branch(*i).forward(x);
    }
    return w;
}

double conjugacy_residual(const BranchMap& map, WordView w) {
    if (w.size() < 2) throw validation_error("conjugacy_residual: need |w| >= 2");
    Projection px = project(map, w);
    const Branch& br = map.branch(int(w[0]) - 1);
    double lhs = project(map, w.subspan(1)).value;
    double x = std::clamp(px.value, br.domain.a, br.domain.b);
    return std::fabs(lhs - br.forward(x));
}

}  // namespace mfa
