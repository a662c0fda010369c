#include "dspec/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#define TOML_EXCEPTIONS 1
#define TOML_HEADER_ONLY 1
#include "toml.hpp"

#include "dspec/errors.hpp"

namespace dspec {

namespace {

json from_toml(const toml::node& node)
{
    if (auto t = node.as_table()) {
        json obj = json::object();
        for (const auto& [k, v] : *t)
            obj[std::string(k.str())] = from_toml(v);
        return obj;
    }
    if (auto a = node.as_array()) {
        json arr = json::array();
        for (const auto& v : *a)
            arr.push_back(from_toml(v));
        return arr;
    }
    if (auto i = node.as_integer())
        return i->get();
    if (auto f = node.as_floating_point()) {
        double v = f->get();
        if (std::isinf(v))
            return v > 0 ? "inf" : "-inf";
        return v;
    }
    if (auto s = node.as_string())
        return s->get();
    if (auto b = node.as_boolean())
        return b->get();
    invalid("InvalidConfig", "unsupported TOML value type");
}

bool ends_with(const std::string& s, const std::string& suffix)
{
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

json parse_config_text(const std::string& text, bool toml)
{
    if (toml) {
        try {
            toml::table tbl = toml::parse(text);
            return from_toml(tbl);
        } catch (const toml::parse_error& e) {
            invalid("InvalidConfig", std::string("TOML parse error: ") + std::string(e.description()));
        }
    }
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        invalid("InvalidConfig", std::string("JSON parse error: ") + e.what());
    }
}

json load_config_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        invalid("InvalidConfig", "cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), ends_with(path, ".toml"));
}

OperatorSpec load_spec(const std::string& path)
{
    return spec_from_config(load_config_file(path));
}

namespace {

// 1 and 1.0 denote the same value in a config; hash them alike.
json numbers_as_double(const json& j)
{
    if (j.is_number())
        return j.get<double>();
    if (j.is_array() || j.is_object()) {
        json out = j;
        for (auto it = out.begin(); it != out.end(); ++it)
            *it = numbers_as_double(*it);
        return out;
    }
    return j;
}

}  // namespace

std::string canonical_dump(const json& j)
{
    // nlohmann::json objects are ordered maps, so dump() is already key-sorted.
    return j.dump();
}

std::uint64_t fnv1a64(const std::string& bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string config_hash(const json& cfg)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical_dump(numbers_as_double(cfg)))));
    return buf;
}

}  // namespace dspec
