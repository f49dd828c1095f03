#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "csv_util.hpp"
#include "rsopf/conic.hpp"
#include "rsopf/error.hpp"

namespace rsopf {

using detail::format_double;

void write_program_text(std::ostream& out, const ConicProgram& p) {
    out << "conic-program 1\n";
    out << "vars " << p.n_vars() << '\n';
    out << "objective_constant " << format_double(p.objective_constant()) << '\n';
    out << "cones " << p.blocks().size() << '\n';
    for (const ConeBlock& b : p.blocks()) out << to_string(b.kind) << ' ' << b.dim << '\n';
    std::size_t nnz = 0;
    for (double c : p.objective()) nnz += (c != 0.0);
    out << "objective " << nnz << '\n';
    for (std::size_t i = 0; i < p.n_vars(); ++i)
        if (p.objective()[i] != 0.0) out << i << ' ' << format_double(p.objective()[i]) << '\n';
    out << "entries " << p.coefficients().size() << '\n';
    for (const Triplet& t : p.coefficients())
        out << t.row << ' ' << t.col << ' ' << format_double(t.value) << '\n';
    nnz = 0;
    for (double v : p.rhs()) nnz += (v != 0.0);
    out << "rhs " << nnz << '\n';
    for (std::size_t r = 0; r < p.row_count(); ++r)
        if (p.rhs()[r] != 0.0) out << r << ' ' << format_double(p.rhs()[r]) << '\n';
}

namespace {

class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    std::string word() {
        std::string w;
        if (!(in_ >> w)) throw ParseError("conic text: unexpected end of input");
        return w;
    }
    void expect(const std::string& key) {
        const std::string w = word();
        if (w != key) throw ParseError("conic text: expected '" + key + "', found '" + w + "'");
    }
    std::size_t index() {
        const std::string w = word();
        const int v = detail::parse_int(w, "conic text index");
        if (v < 0) throw ParseError("conic text: negative index");
        return static_cast<std::size_t>(v);
    }
    double number() { return detail::parse_double(word(), "conic text value"); }

private:
    std::istream& in_;
};

}  // namespace

ConicProgram read_program_text(std::istream& in) {
    static const std::map<std::string, ConeKind> kinds{{"zero", ConeKind::zero},
                                                       {"nonneg", ConeKind::nonnegative},
                                                       {"soc", ConeKind::second_order},
                                                       {"rsoc", ConeKind::rotated_second_order}};
    Reader r(in);
    r.expect("conic-program");
    if (r.index() != 1) throw ParseError("conic text: unsupported version");
    r.expect("vars");
    ConicProgram p(r.index());
    r.expect("objective_constant");
    p.set_objective_constant(r.number());
    r.expect("cones");
    const std::size_t k = r.index();
    for (std::size_t i = 0; i < k; ++i) {
        const std::string name = r.word();
        auto it = kinds.find(name);
        if (it == kinds.end()) throw ParseError("conic text: unknown cone '" + name + "'");
        p.add_block(it->second, r.index());
    }
    r.expect("objective");
    for (std::size_t i = 0, n = r.index(); i < n; ++i) {
        const std::size_t col = r.index();
        p.add_objective(col, r.number());
    }
    r.expect("entries");
    for (std::size_t i = 0, n = r.index(); i < n; ++i) {
        const std::size_t row = r.index();
        const std::size_t col = r.index();
        p.add_coefficient(row, col, r.number());
    }
    r.expect("rhs");
    for (std::size_t i = 0, n = r.index(); i < n; ++i) {
        const std::size_t row = r.index();
        p.set_rhs(row, r.number());
    }
    p.validate();
    return p;
}

}  // namespace rsopf
