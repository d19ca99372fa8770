#include "forensic/dataset.hpp"

#include "forensic/error.hpp"

#include <json.hpp>

#include <istream>
#include <map>
#include <unordered_map>
#include <unordered_set>

namespace forensic {

namespace {

using nlohmann::json;

bool is_retired(const json& obj)
{
    return obj.value("revoked", false) || obj.value("x_mitre_deprecated", false);
}

bool is_threat_type(std::string_view type)
{
    return type == "intrusion-set" || type == "malware" || type == "tool" || type == "campaign";
}

std::string_view type_of_ref(std::string_view ref)
{
    auto pos = ref.find("--");
    return pos == std::string_view::npos ? std::string_view{} : ref.substr(0, pos);
}

// ATT&CK id from an attack-pattern's external references.
std::optional<std::string> attack_id(const json& obj)
{
    auto it = obj.find("external_references");
    if (it == obj.end() || !it->is_array()) return std::nullopt;
    for (const auto& ref : *it) {
        if (!ref.is_object()) continue;
        if (ref.value("source_name", "") == "mitre-attack" && ref.contains("external_id") &&
            ref["external_id"].is_string())
            return ref["external_id"].get<std::string>();
    }
    return std::nullopt;
}

// Exact id, else the parent technique of a sub-technique (T1566.001 -> T1566).
std::optional<TechniqueIndex> map_to_catalog(const Catalog& catalog, const std::string& id)
{
    if (auto i = catalog.find(id)) return i;
    if (auto dot = id.find('.'); dot != std::string::npos) return catalog.find(id.substr(0, dot));
    return std::nullopt;
}

struct ReferenceGroup {
    std::string source_name;
    TechniqueSet techniques;
};

StixIngestResult ingest_parsed(std::istream& bundle, const Catalog& catalog)
{
    json doc;
    try {
        doc = json::parse(bundle);
    } catch (const json::parse_error& e) {
        throw ParseError("stix", 0, std::string("malformed JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("stix", 0, "bundle must be a JSON object");
    if (doc.value("type", "") != "bundle") throw ParseError("stix", 0, "top-level object is not a STIX bundle");

    StixIngestResult result;
    const auto objects_it = doc.find("objects");
    if (objects_it == doc.end() || objects_it->empty()) {
        result.corpus = Corpus(catalog, {});
        result.warnings.push_back("bundle contains no objects; no incidents extracted");
        return result;
    }
    if (!objects_it->is_array()) throw ParseError("stix", 0, "'objects' must be an array");
    const json& objects = *objects_it;

    std::unordered_map<std::string, TechniqueIndex> pattern_to_technique;
    std::unordered_set<std::string> threat_objects;
    std::unordered_set<std::string> retired;

    for (const auto& obj : objects) {
        if (!obj.is_object() || !obj.contains("type") || !obj.contains("id") || !obj["type"].is_string() ||
            !obj["id"].is_string())
            throw ParseError("stix", 0, "object without a string type and id");
        const auto type = obj["type"].get<std::string>();
        const auto id = obj["id"].get<std::string>();
        if (is_retired(obj)) {
            retired.insert(id);
            continue;
        }
        if (type == "attack-pattern") {
            if (auto ext = attack_id(obj))
                if (auto idx = map_to_catalog(catalog, *ext)) pattern_to_technique.emplace(id, *idx);
        } else if (is_threat_type(type)) {
            threat_objects.insert(id);
        }
    }

    std::map<std::pair<std::string, std::string>, std::size_t> group_index;
    std::vector<ReferenceGroup> groups;

    for (const auto& obj : objects) {
        if (obj.value("type", "") != "relationship" || is_retired(obj)) continue;
        if (obj.value("relationship_type", "") != "uses") continue;
        if (!obj.contains("source_ref") || !obj.contains("target_ref") || !obj["source_ref"].is_string() ||
            !obj["target_ref"].is_string())
            throw ParseError("stix", 0, "relationship " + obj["id"].get<std::string>() + " lacks string refs");
        const auto source = obj["source_ref"].get<std::string>();
        const auto target = obj["target_ref"].get<std::string>();
        if (retired.contains(source) || retired.contains(target)) continue;
        const bool threat = threat_objects.contains(source) || is_threat_type(type_of_ref(source));
        if (!threat || type_of_ref(target) != "attack-pattern") continue;

        const auto refs = obj.find("external_references");
        if (refs == obj.end() || !refs->is_array()) continue;
        const auto technique = pattern_to_technique.find(target);
        for (const auto& ref : *refs) {
            if (!ref.is_object()) continue;
            const auto name = ref.value("source_name", "");
            if (name.empty()) continue;
            auto locator = ref.value("url", "");
            if (locator.empty()) locator = ref.value("description", "");
            auto key = std::make_pair(name, locator);
            auto [it, inserted] = group_index.try_emplace(key, groups.size());
            if (inserted) groups.push_back({name, {}});
            if (technique != pattern_to_technique.end()) groups[it->second].techniques.insert(technique->second);
        }
    }

    result.references_seen = groups.size();
    std::vector<Incident> incidents;
    std::unordered_map<std::string, std::size_t> name_uses;
    for (const auto& g : groups) {
        if (g.techniques.size() < 2) continue;
        std::string id = g.source_name;
        if (auto n = ++name_uses[g.source_name]; n > 1) id += "#" + std::to_string(n);
        incidents.push_back({std::move(id), g.techniques});
    }
    if (incidents.empty()) result.warnings.push_back("no incidents with at least 2 catalog techniques found");
    result.corpus = Corpus(catalog, std::move(incidents));
    return result;
}

} // namespace

StixIngestResult ingest_stix(std::istream& bundle, const Catalog& catalog)
{
    try {
        return ingest_parsed(bundle, catalog);
    } catch (const json::type_error& e) {
        throw ParseError("stix", 0, std::string("unexpected field type: ") + e.what());
    }
}

} // namespace forensic
