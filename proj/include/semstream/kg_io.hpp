#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "semstream/kg.hpp"

namespace semstream {

// Line-oriented KG text format:
//   entity <id> <category>
//   triple <head> <relation> <tail> <prob>
// '#' starts a comment; blank lines ignored.
inline KnowledgeGraph parse_kg(std::istream& in) {
    KnowledgeGraph g;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string kind;
        if (!(ls >> kind)) continue;
        try {
            if (kind == "entity") {
                std::string id, cat;
                if (!(ls >> id >> cat)) throw ParseError(lineno, "entity needs <id> <category>");
                auto c = category_from_string(cat);
                if (!c) throw ParseError(lineno, "unknown category: " + cat);
                g.add_entity(id, *c);
            } else if (kind == "triple") {
                std::string head, rel, tail;
                double prob;
                if (!(ls >> head >> rel >> tail >> prob))
                    throw ParseError(lineno, "triple needs <head> <relation> <tail> <prob>");
                g.add_triple(head, rel, tail, prob);
            } else {
                throw ParseError(lineno, "unknown record kind: " + kind);
            }
            std::string extra;
            if (ls >> extra) throw ParseError(lineno, "trailing tokens: " + extra);
        } catch (const ParseError&) {
            throw;
        } catch (const Error& e) {
            throw ParseError(lineno, e.what());
        }
    }
    return g;
}

inline KnowledgeGraph parse_kg_string(const std::string& text) {
    std::istringstream in(text);
    return parse_kg(in);
}

inline KnowledgeGraph load_kg(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open kg file: " + path);
    return parse_kg(in);
}

inline void serialize_kg(const KnowledgeGraph& g, std::ostream& out) {
    for (const auto& [id, cat] : g.entities())
        out << "entity " << id << " " << to_string(cat) << "\n";
    for (const auto& [key, p] : g.triples()) {
        std::ostringstream num;
        num.precision(17);
        num << p;
        out << "triple " << key.head << " " << key.relation << " " << key.tail << " "
            << num.str() << "\n";
    }
}

} // namespace semstream
