#include "forensic/dataset.hpp"

#include "forensic/error.hpp"
#include "forensic/format.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <unordered_set>

namespace forensic {

namespace {

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

// RFC 4180-style split of one record; quoted fields may contain commas and "" escapes.
std::vector<std::string> split_csv(std::string_view line, const std::string& source, std::size_t line_no)
{
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    bool was_quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"' && trim(cur).empty()) {
            cur.clear();
            quoted = true;
            was_quoted = true;
        } else if (c == ',') {
            fields.push_back(was_quoted ? cur : std::string(trim(cur)));
            cur.clear();
            was_quoted = false;
        } else {
            cur.push_back(c);
        }
    }
    if (quoted) throw ParseError(source, line_no, "unterminated quoted field");
    fields.push_back(was_quoted ? cur : std::string(trim(cur)));
    return fields;
}

double parse_number(std::string_view text, const std::string& source, std::size_t line_no, const char* field)
{
    text = trim(text);
    double value = 0.0;
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    if (!text.empty() && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, value, std::chars_format::general);
    if (text.empty() || ec != std::errc{} || ptr != last)
        throw ParseError(source, line_no, std::string("invalid number in field '") + field + "': '" +
                                               std::string(text) + "'");
    return value;
}

bool needs_quotes(std::string_view s)
{
    return s.find_first_of(",\"\n\r") != std::string_view::npos || (!s.empty() && (s.front() == ' ' || s.back() == ' '));
}

std::string quote_csv(std::string_view s)
{
    if (!needs_quotes(s)) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

// Yields non-blank lines with 1-based numbers; strips a UTF-8 BOM from the first.
template <typename Fn>
void for_each_line(std::istream& in, Fn&& fn)
{
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
        if (trim(line).empty()) continue;
        fn(std::string_view(line), line_no);
    }
}

void expect_header(const std::vector<std::string>& got, const std::vector<std::string>& want,
                   const std::string& source, std::size_t line_no)
{
    if (got != want) {
        std::string expected;
        for (const auto& w : want) expected += (expected.empty() ? "" : ",") + w;
        throw ParseError(source, line_no, "expected header '" + expected + "'");
    }
}

} // namespace

Catalog::Catalog(std::vector<Technique> techniques)
    : techniques_(std::move(techniques))
{
    if (techniques_.empty()) throw ValidationError("catalog is empty");
    if (techniques_.size() > kMaxTechniques)
        throw ValidationError("catalog has " + std::to_string(techniques_.size()) + " techniques; at most " +
                              std::to_string(kMaxTechniques) + " are supported");
    for (std::size_t i = 0; i < techniques_.size(); ++i) {
        const auto& t = techniques_[i];
        if (t.id.empty()) throw ValidationError("technique #" + std::to_string(i + 1) + " has an empty id");
        if (!std::isfinite(t.benefit) || t.benefit <= 0.0)
            throw ValidationError("technique " + t.id + ": benefit must be positive and finite");
        if (!std::isfinite(t.cost) || t.cost <= 0.0)
            throw ValidationError("technique " + t.id + ": cost must be positive and finite");
        if (!by_id_.emplace(t.id, i).second) throw ValidationError("duplicate technique id " + t.id);
    }
}

std::optional<TechniqueIndex> Catalog::find(std::string_view id) const
{
    auto it = by_id_.find(std::string(id));
    if (it == by_id_.end()) return std::nullopt;
    return it->second;
}

TechniqueIndex Catalog::index_of(std::string_view id) const
{
    if (auto i = find(id)) return *i;
    throw ValidationError("unknown technique id " + std::string(id));
}

TechniqueSet Catalog::all() const
{
    TechniqueSet s;
    for (std::size_t i = 0; i < techniques_.size(); ++i) s.insert(i);
    return s;
}

double Catalog::total_cost() const
{
    double c = 0.0;
    for (const auto& t : techniques_) c += t.cost;
    return c;
}

double Catalog::total_benefit() const
{
    double b = 0.0;
    for (const auto& t : techniques_) b += t.benefit;
    return b;
}

TechniqueSet Catalog::parse_ids(const std::vector<std::string>& ids) const
{
    TechniqueSet s;
    for (const auto& id : ids) s.insert(index_of(id));
    return s;
}

std::vector<std::string> Catalog::ids_of(const TechniqueSet& set) const
{
    std::vector<std::string> out;
    set.for_each([&](TechniqueIndex i) { out.push_back(techniques_.at(i).id); });
    return out;
}

Corpus::Corpus(Catalog catalog, std::vector<Incident> incidents)
    : catalog_(std::move(catalog)), incidents_(std::move(incidents))
{
    if (catalog_.size() == 0) throw ValidationError("catalog is empty");
    const TechniqueSet universe = catalog_.all();
    std::unordered_set<std::string> seen;
    for (const auto& inc : incidents_) {
        if (inc.id.empty()) throw ValidationError("incident with empty id");
        if (!seen.insert(inc.id).second) throw ValidationError("duplicate incident id " + inc.id);
        if (inc.used.empty()) throw ValidationError("incident " + inc.id + " uses no techniques");
        if (!inc.used.is_subset_of(universe))
            throw ValidationError("incident " + inc.id + " references techniques outside the catalog");
    }
}

std::optional<std::size_t> Corpus::find(std::string_view incident_id) const
{
    for (std::size_t i = 0; i < incidents_.size(); ++i)
        if (incidents_[i].id == incident_id) return i;
    return std::nullopt;
}

Corpus Corpus::without(std::size_t index) const
{
    Corpus out;
    out.catalog_ = catalog_;
    out.incidents_.reserve(incidents_.size() - 1);
    for (std::size_t i = 0; i < incidents_.size(); ++i)
        if (i != index) out.incidents_.push_back(incidents_[i]);
    return out;
}

Catalog parse_catalog(std::istream& in, const std::string& source)
{
    std::vector<Technique> techniques;
    bool header = true;
    for_each_line(in, [&](std::string_view line, std::size_t line_no) {
        auto fields = split_csv(line, source, line_no);
        if (header) {
            expect_header(fields, {"id", "name", "benefit", "cost"}, source, line_no);
            header = false;
            return;
        }
        if (fields.size() != 4)
            throw ParseError(source, line_no, "expected 4 fields, got " + std::to_string(fields.size()));
        Technique t;
        t.id = fields[0];
        t.name = fields[1];
        t.benefit = parse_number(fields[2], source, line_no, "benefit");
        t.cost = parse_number(fields[3], source, line_no, "cost");
        if (t.id.empty()) throw ParseError(source, line_no, "empty technique id");
        techniques.push_back(std::move(t));
    });
    if (header) throw ParseError(source, 0, "missing header");
    return Catalog(std::move(techniques));
}

std::vector<Incident> parse_incidents(std::istream& in, const Catalog& catalog, const std::string& source)
{
    std::vector<Incident> incidents;
    bool header = true;
    for_each_line(in, [&](std::string_view line, std::size_t line_no) {
        auto fields = split_csv(line, source, line_no);
        if (header) {
            expect_header(fields, {"incident_id", "technique_ids"}, source, line_no);
            header = false;
            return;
        }
        if (fields.size() != 2)
            throw ParseError(source, line_no, "expected 2 fields, got " + std::to_string(fields.size()));
        Incident inc;
        inc.id = fields[0];
        if (inc.id.empty()) throw ParseError(source, line_no, "empty incident id");
        std::string_view rest = fields[1];
        while (!rest.empty()) {
            auto pos = rest.find(';');
            auto tok = trim(rest.substr(0, pos));
            if (!tok.empty()) {
                auto idx = catalog.find(tok);
                if (!idx)
                    throw ValidationError(source + ":" + std::to_string(line_no) + ": unknown technique id " +
                                          std::string(tok) + " in incident " + inc.id);
                inc.used.insert(*idx);
            }
            if (pos == std::string_view::npos) break;
            rest.remove_prefix(pos + 1);
        }
        if (inc.used.empty())
            throw ValidationError(source + ":" + std::to_string(line_no) + ": incident " + inc.id +
                                  " uses no techniques");
        incidents.push_back(std::move(inc));
    });
    if (header) throw ParseError(source, 0, "missing header");
    return incidents;
}

Corpus load_corpus(std::istream& catalog_source, std::istream& incidents_source)
{
    Catalog catalog = parse_catalog(catalog_source);
    auto incidents = parse_incidents(incidents_source, catalog);
    return Corpus(std::move(catalog), std::move(incidents));
}

Corpus load_corpus_files(const std::string& catalog_path, const std::string& incidents_path)
{
    std::ifstream c(catalog_path);
    if (!c) throw ParseError(catalog_path, 0, "cannot open file");
    std::ifstream i(incidents_path);
    if (!i) throw ParseError(incidents_path, 0, "cannot open file");
    Catalog catalog = parse_catalog(c, catalog_path);
    auto incidents = parse_incidents(i, catalog, incidents_path);
    return Corpus(std::move(catalog), std::move(incidents));
}

void write_catalog(std::ostream& out, const Catalog& catalog)
{
    out << "id,name,benefit,cost\n";
    for (const auto& t : catalog.techniques())
        out << quote_csv(t.id) << ',' << quote_csv(t.name) << ',' << format_number(t.benefit) << ','
            << format_number(t.cost) << '\n';
}

void write_incidents(std::ostream& out, const Corpus& corpus)
{
    out << "incident_id,technique_ids\n";
    for (const auto& inc : corpus.incidents()) {
        std::string ids;
        inc.used.for_each([&](TechniqueIndex i) {
            if (!ids.empty()) ids.push_back(';');
            ids += corpus.catalog()[i].id;
        });
        out << quote_csv(inc.id) << ',' << quote_csv(ids) << '\n';
    }
}

CorpusStats corpus_stats(const Corpus& corpus)
{
    CorpusStats st;
    st.incident_count = corpus.size();
    st.frequency.assign(corpus.catalog().size(), 0);
    if (corpus.empty()) return st;
    st.min_techniques = std::numeric_limits<std::size_t>::max();
    std::size_t total = 0;
    for (const auto& inc : corpus.incidents()) {
        const auto n = inc.used.size();
        total += n;
        st.min_techniques = std::min(st.min_techniques, n);
        st.max_techniques = std::max(st.max_techniques, n);
        inc.used.for_each([&](TechniqueIndex i) { ++st.frequency[i]; });
    }
    st.mean_techniques = static_cast<double>(total) / static_cast<double>(corpus.size());
    return st;
}

} // namespace forensic
