#pragma once

#include "forensic/technique_set.hpp"

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace forensic {

struct Technique {
    std::string id;
    std::string name;
    double benefit = 0.0;
    double cost = 0.0;

    double ratio() const { return benefit / cost; }

    friend bool operator==(const Technique&, const Technique&) = default;
};

// Ordered technique list; position in the list is the TechniqueIndex used everywhere.
class Catalog {
public:
    Catalog() = default;
    explicit Catalog(std::vector<Technique> techniques);

    std::size_t size() const { return techniques_.size(); }
    const Technique& operator[](TechniqueIndex i) const { return techniques_[i]; }
    const std::vector<Technique>& techniques() const { return techniques_; }

    std::optional<TechniqueIndex> find(std::string_view id) const;
    // Throws ValidationError naming the id when absent.
    TechniqueIndex index_of(std::string_view id) const;

    TechniqueSet all() const;
    double total_cost() const;
    double total_benefit() const;

    TechniqueSet parse_ids(const std::vector<std::string>& ids) const;
    std::vector<std::string> ids_of(const TechniqueSet& set) const;

    friend bool operator==(const Catalog& a, const Catalog& b) { return a.techniques_ == b.techniques_; }

private:
    std::vector<Technique> techniques_;
    std::unordered_map<std::string, TechniqueIndex> by_id_;
};

struct Incident {
    std::string id;
    TechniqueSet used;

    friend bool operator==(const Incident&, const Incident&) = default;
};

class Corpus {
public:
    Corpus() = default;
    // Validates every incident against the catalog; throws ValidationError.
    Corpus(Catalog catalog, std::vector<Incident> incidents);

    const Catalog& catalog() const { return catalog_; }
    const std::vector<Incident>& incidents() const { return incidents_; }
    std::size_t size() const { return incidents_.size(); }
    bool empty() const { return incidents_.empty(); }
    const Incident& operator[](std::size_t i) const { return incidents_[i]; }

    std::optional<std::size_t> find(std::string_view incident_id) const;

    // Same catalog, incident at `index` removed.
    Corpus without(std::size_t index) const;

    friend bool operator==(const Corpus& a, const Corpus& b)
    {
        return a.catalog_ == b.catalog_ && a.incidents_ == b.incidents_;
    }

private:
    Catalog catalog_;
    std::vector<Incident> incidents_;
};

struct CorpusStats {
    std::size_t incident_count = 0;
    double mean_techniques = 0.0;
    std::size_t min_techniques = 0;
    std::size_t max_techniques = 0;
    std::vector<std::size_t> frequency; // per catalog index
};

Catalog parse_catalog(std::istream& in, const std::string& source_name = "catalog");
std::vector<Incident> parse_incidents(std::istream& in, const Catalog& catalog,
                                      const std::string& source_name = "incidents");

Corpus load_corpus(std::istream& catalog_source, std::istream& incidents_source);
Corpus load_corpus_files(const std::string& catalog_path, const std::string& incidents_path);

void write_catalog(std::ostream& out, const Catalog& catalog);
void write_incidents(std::ostream& out, const Corpus& corpus);

CorpusStats corpus_stats(const Corpus& corpus);

struct StixIngestResult {
    Corpus corpus;
    std::vector<std::string> warnings;
    std::size_t references_seen = 0;
};

// Groups "uses" relationships from threat objects to attack-patterns by cited
// external reference (source name + URL); each group with at least two catalog
// techniques becomes an incident.
StixIngestResult ingest_stix(std::istream& bundle, const Catalog& catalog);

} // namespace forensic
