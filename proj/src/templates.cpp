#include "kgqa/templates.hpp"

#include "kgqa/errors.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <map>
#include <sstream>

namespace kgqa {

using nlohmann::json;

namespace {

const std::map<std::string, Family> kFamilies = {
    {"positions_of_person", Family::PositionsOfPerson},
    {"org_of_person", Family::OrgOfPerson},
    {"persons_of_org", Family::PersonsOfOrg},
    {"roles_of_org", Family::RolesOfOrg},
    {"orgs_of_role", Family::OrgsOfRole},
    {"locations_of_org", Family::LocationsOfOrg},
    {"org_of_location", Family::OrgOfLocation},
    {"types_of_location", Family::TypesOfLocation},
    {"roles_of_org_of_person", Family::RolesOfOrgOfPerson},
    {"roles_of_org_of_location", Family::RolesOfOrgOfLocation},
    {"persons_by_company", Family::PersonsByCompany},
    {"location_by_company", Family::LocationByCompany},
};

const std::map<std::string, Selector> kSelectors = {
    {"none", Selector::None},           {"org", Selector::Org},
    {"location", Selector::Location},   {"location_diff", Selector::LocationDiff},
    {"employee", Selector::Employee},   {"role_combo", Selector::RoleCombo},
    {"role_pair", Selector::RolePair},
};

const std::map<std::string, SetSite> kSites = {
    {"none", SetSite::None},
    {"anchors", SetSite::Anchors},
    {"positions", SetSite::Positions},
    {"selector", SetSite::SelectorRoles},
};

} // namespace

std::string default_catalog_path() {
    return std::string(KGQA_DATA_DIR) + "/templates.json";
}

std::vector<TemplateSpec> load_catalog(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open template catalog: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw SchemaError("template catalog " + path + ": " + e.what());
    }
    if (!doc.is_object() || !doc.contains("templates") || !doc["templates"].is_array())
        throw SchemaError("template catalog: expected object with 'templates' array");

    std::vector<TemplateSpec> out;
    std::map<std::string, bool> seen_ids;
    for (const auto& e : doc["templates"]) {
        TemplateSpec t;
        t.template_id = e.at("id").get<std::string>();
        if (seen_ids.count(t.template_id))
            throw SchemaError("duplicate template id " + t.template_id);
        seen_ids[t.template_id] = true;
        t.pattern = e.at("pattern").get<std::string>();
        t.plurality = e.at("p").get<int>();
        t.hops = e.at("h").get<int>();
        t.set_ops = e.at("so").get<int>();

        auto fam = kFamilies.find(e.at("family").get<std::string>());
        if (fam == kFamilies.end())
            throw SchemaError(t.template_id + ": unknown family");
        t.family = fam->second;

        auto sel = kSelectors.find(e.value("selector", "none"));
        if (sel == kSelectors.end())
            throw SchemaError(t.template_id + ": unknown selector");
        t.selector = sel->second;

        auto site = kSites.find(e.value("set_site", "none"));
        if (site == kSites.end())
            throw SchemaError(t.template_id + ": unknown set_site");
        t.set_site = site->second;

        if (e.contains("set")) {
            for (const auto& i : e["set"].at("positive"))
                t.set_expr.positive.push_back(i.get<int>());
            for (const auto& i : e["set"].at("negative"))
                t.set_expr.negative.push_back(i.get<int>());
        }
        for (const auto& s : e.at("slots")) {
            SlotSpec slot;
            slot.name = s.at("name").get<std::string>();
            slot.role = s.at("role").get<std::string>();
            t.slots.push_back(std::move(slot));
        }
        for (const auto& h : e.at("hop_path"))
            t.hop_path.push_back(h.get<std::string>());
        t.if_one = e.value("if_one", false);
        t.unique_company = e.value("unique_company", false);

        if (t.plurality < 0 || t.plurality > 1 || t.hops < 1 || t.hops > 3 || t.set_ops < 0 ||
            t.set_ops > 3)
            throw SchemaError(t.template_id + ": dimension out of range");
        if (t.level() < 1 || t.level() > 5)
            throw SchemaError(t.template_id + ": level out of [1,5]");
        if (t.set_expr.so_count() != t.set_ops)
            throw SchemaError(t.template_id + ": set expression implies " +
                              std::to_string(t.set_expr.so_count()) + " set ops, catalog says " +
                              std::to_string(t.set_ops));
        if ((t.set_site == SetSite::None) != t.set_expr.empty())
            throw SchemaError(t.template_id + ": set_site and set expression disagree");
        for (const auto& s : t.slots) {
            if (t.pattern.find(s.name) == std::string::npos)
                throw SchemaError(t.template_id + ": slot '" + s.name +
                                  "' missing from pattern");
        }
        out.push_back(std::move(t));
    }
    return out;
}

} // namespace kgqa
