#include "revpomdp/modelio.hpp"

#include <cctype>
#include <fstream>
#include <optional>
#include <iterator>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "json.hpp"

#include "revpomdp/errors.hpp"

namespace revpomdp {

namespace {

/// JSON value with the byte offset where it starts.
struct Node {
    enum class Kind { Null, Boolean, Number, String, Array, Object };
    Kind kind = Kind::Null;
    std::size_t offset = 0;
    bool boolean = false;
    bool integral = false;
    std::string text;  // string contents, or the number as written
    std::vector<Node> items;
    std::vector<std::pair<std::string, Node>> members;
    std::vector<std::size_t> key_offsets;
};

const char* kind_name(Node::Kind k) {
    switch (k) {
        case Node::Kind::Null: return "null";
        case Node::Kind::Boolean: return "boolean";
        case Node::Kind::Number: return "number";
        case Node::Kind::String: return "string";
        case Node::Kind::Array: return "array";
        case Node::Kind::Object: return "object";
    }
    return "value";
}

/// Input iterator that reports how many bytes the lexer has consumed.
class CountingIterator {
public:
    using iterator_category = std::input_iterator_tag;
    using value_type = char;
    using difference_type = std::ptrdiff_t;
    using pointer = const char*;
    using reference = const char&;

    CountingIterator(const char* p, std::size_t* consumed) : p_(p), consumed_(consumed) {}
    reference operator*() const { return *p_; }
    CountingIterator& operator++() {
        ++p_;
        ++*consumed_;
        return *this;
    }
    CountingIterator operator++(int) {
        auto copy = *this;
        ++*this;
        return copy;
    }
    bool operator==(const CountingIterator& other) const { return p_ == other.p_; }
    bool operator!=(const CountingIterator& other) const { return p_ != other.p_; }

private:
    const char* p_;
    std::size_t* consumed_;
};

class PositionedBuilder : public nlohmann::json_sax<nlohmann::json> {
public:
    static constexpr std::size_t max_depth = 128;

    PositionedBuilder(std::string_view text, const std::size_t* consumed) : text_(text), consumed_(consumed) {}

    Node root;
    std::optional<std::pair<std::string, std::size_t>> failure;

    bool null() override { return scalar(Node::Kind::Null, token_start()); }
    bool boolean(bool v) override {
        Node n;
        n.kind = Node::Kind::Boolean;
        n.boolean = v;
        n.offset = token_start();
        return add(std::move(n));
    }
    bool number_integer(number_integer_t v) override { return number(std::to_string(v), true); }
    bool number_unsigned(number_unsigned_t v) override { return number(std::to_string(v), true); }
    bool number_float(number_float_t, const string_t& raw) override { return number(raw, false); }
    bool string(string_t& v) override {
        Node n;
        n.kind = Node::Kind::String;
        n.text = v;
        n.offset = string_start();
        return add(std::move(n));
    }
    bool binary(binary_t&) override { return fail("binary values are not supported", *consumed_); }
    bool start_object(std::size_t) override { return open(Node::Kind::Object); }
    bool end_object() override { return close(); }
    bool start_array(std::size_t) override { return open(Node::Kind::Array); }
    bool end_array() override { return close(); }
    bool key(string_t& k) override {
        Node* obj = stack_.back();
        const std::size_t at = string_start();
        for (const auto& [existing, _] : obj->members)
            if (existing == k) return fail("duplicate key \"" + k + "\"", at);
        pending_key_ = k;
        pending_key_offset_ = at;
        return true;
    }
    bool parse_error(std::size_t position, const std::string&, const nlohmann::detail::exception& ex) override {
        std::string what = ex.what();
        // Strip the library prefix "[json.exception.parse_error.101] parse error at line 1, column 2: ".
        if (auto colon = what.find(": "); colon != std::string::npos) what = what.substr(colon + 2);
        return fail(what, position == 0 ? 0 : position - 1);
    }

private:
    std::size_t token_start() const {
        std::size_t end = std::min(*consumed_, text_.size());
        std::size_t i = end;
        auto token_char = [](char c) {
            return std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '+' || c == '-';
        };
        // Numbers are reported after the lexer consumed one delimiter.
        if (i > 0 && !token_char(text_[i - 1])) --i;
        while (i > 0 && token_char(text_[i - 1])) --i;
        return i;
    }

    std::size_t string_start() const {
        std::size_t end = std::min(*consumed_, text_.size());
        if (end == 0) return 0;
        std::size_t i = end - 1;  // closing quote
        while (i > 0) {
            --i;
            if (text_[i] != '"') continue;
            std::size_t slashes = 0;
            while (i >= slashes + 1 && text_[i - slashes - 1] == '\\') ++slashes;
            if (slashes % 2 == 0) return i;
        }
        return 0;
    }

    bool number(std::string raw, bool integral) {
        Node n;
        n.kind = Node::Kind::Number;
        n.text = std::move(raw);
        n.integral = integral;
        n.offset = token_start();
        return add(std::move(n));
    }

    bool scalar(Node::Kind kind, std::size_t offset) {
        Node n;
        n.kind = kind;
        n.offset = offset;
        return add(std::move(n));
    }

    bool open(Node::Kind kind) {
        if (stack_.size() >= max_depth) return fail("nesting deeper than " + std::to_string(max_depth), *consumed_ - 1);
        Node n;
        n.kind = kind;
        n.offset = *consumed_ == 0 ? 0 : *consumed_ - 1;
        Node* placed = place(std::move(n));
        stack_.push_back(placed);
        return true;
    }

    bool close() {
        stack_.pop_back();
        return true;
    }

    bool add(Node n) {
        place(std::move(n));
        return true;
    }

    Node* place(Node n) {
        if (stack_.empty()) {
            root = std::move(n);
            return &root;
        }
        Node* parent = stack_.back();
        if (parent->kind == Node::Kind::Array) {
            parent->items.push_back(std::move(n));
            return &parent->items.back();
        }
        parent->members.emplace_back(pending_key_, std::move(n));
        parent->key_offsets.push_back(pending_key_offset_);
        return &parent->members.back().second;
    }

    bool fail(std::string message, std::size_t offset) {
        if (!failure) failure.emplace(std::move(message), offset);
        return false;
    }

    std::string_view text_;
    const std::size_t* consumed_;
    std::vector<Node*> stack_;
    std::string pending_key_;
    std::size_t pending_key_offset_ = 0;
};

class DocumentReader {
public:
    explicit DocumentReader(std::string_view text) : text_(text) {}

    [[noreturn]] void error(const std::string& message, std::size_t offset) const {
        std::size_t line = 1, column = 1;
        for (std::size_t i = 0; i < offset && i < text_.size(); ++i) {
            if (text_[i] == '\n') {
                ++line;
                column = 1;
            } else {
                ++column;
            }
        }
        throw ParseError(message, line, column);
    }

    Node parse() const {
        std::size_t consumed = 0;
        PositionedBuilder builder(text_, &consumed);
        CountingIterator first(text_.data(), &consumed);
        CountingIterator last(text_.data() + text_.size(), &consumed);
        bool ok = false;
        try {
            ok = nlohmann::json::sax_parse(first, last, &builder);
        } catch (const nlohmann::json::exception& ex) {
            error(ex.what(), consumed);
        }
        if (!ok || builder.failure) {
            if (builder.failure) error(builder.failure->first, builder.failure->second);
            error("malformed document", consumed);
        }
        return std::move(builder.root);
    }

    void expect(const Node& n, Node::Kind kind, const std::string& what) const {
        if (n.kind != kind)
            error(what + " must be " + (kind == Node::Kind::Array ? "an " : "a ") + kind_name(kind) + ", found " +
                      kind_name(n.kind),
                  n.offset);
    }

    std::string string_value(const Node& n, const std::string& what) const {
        expect(n, Node::Kind::String, what);
        return n.text;
    }

    std::vector<std::string> string_list(const Node& n, const std::string& what) const {
        expect(n, Node::Kind::Array, what);
        std::vector<std::string> out;
        for (const auto& item : n.items) out.push_back(string_value(item, what + " entry"));
        return out;
    }

    Rational probability(const Node& n, const std::string& what) const {
        if (n.kind != Node::Kind::String && n.kind != Node::Kind::Number)
            error(what + " must be a string such as \"1/3\" or a number", n.offset);
        auto value = parse_rational(n.text);
        if (!value) error("malformed probability \"" + n.text + "\"", n.offset);
        return *value;
    }

    long long integer(const Node& n, const std::string& what) const {
        if (n.kind != Node::Kind::Number || !n.integral) error(what + " must be an integer", n.offset);
        try {
            return std::stoll(n.text);
        } catch (const std::exception&) {
            error(what + " out of range", n.offset);
        }
    }

    RawPomdp read() const {
        const Node root = parse();
        expect(root, Node::Kind::Object, "model document");
        RawPomdp raw;
        std::set<std::string> present;
        for (std::size_t i = 0; i < root.members.size(); ++i) {
            const auto& [key, value] = root.members[i];
            present.insert(key);
            if (key == "revealing") {
                expect(value, Node::Kind::Boolean, "\"revealing\"");
                raw.revealing = value.boolean;
            } else if (key == "states") {
                raw.states = string_list(value, "\"states\"");
            } else if (key == "actions") {
                raw.actions = string_list(value, "\"actions\"");
            } else if (key == "signals") {
                raw.signals = string_list(value, "\"signals\"");
            } else if (key == "transitions") {
                read_transitions(value, raw);
            } else if (key == "initial") {
                expect(value, Node::Kind::Object, "\"initial\"");
                for (const auto& [state, p] : value.members)
                    raw.initial.emplace_back(state, probability(p, "initial probability"));
            } else if (key == "priorities") {
                expect(value, Node::Kind::Object, "\"priorities\"");
                raw.priorities.emplace();
                for (std::size_t j = 0; j < value.members.size(); ++j) {
                    const auto& [state, p] = value.members[j];
                    const long long v = integer(p, "priority");
                    if (v < 0) error("priority must be non-negative", p.offset);
                    raw.priorities->emplace_back(state, v);
                }
            } else if (key == "targets") {
                raw.targets = string_list(value, "\"targets\"");
            } else {
                error("unknown key \"" + key + "\"", root.key_offsets[i]);
            }
        }
        for (const char* required : {"states", "actions", "signals", "transitions", "initial"})
            if (!present.count(required)) error(std::string("missing required key \"") + required + "\"", root.offset);
        return raw;
    }

private:
    void read_transitions(const Node& list, RawPomdp& raw) const {
        expect(list, Node::Kind::Array, "\"transitions\"");
        std::set<std::tuple<std::string, std::string, std::string, std::string>> seen;
        for (const auto& entry : list.items) {
            expect(entry, Node::Kind::Object, "transition");
            RawTransition t;
            bool has[5] = {false, false, false, false, false};
            for (std::size_t i = 0; i < entry.members.size(); ++i) {
                const auto& [key, value] = entry.members[i];
                if (key == "from") {
                    t.from = string_value(value, "\"from\"");
                    has[0] = true;
                } else if (key == "action") {
                    t.action = string_value(value, "\"action\"");
                    has[1] = true;
                } else if (key == "to") {
                    t.to = string_value(value, "\"to\"");
                    has[2] = true;
                } else if (key == "signal") {
                    t.signal = string_value(value, "\"signal\"");
                    has[3] = true;
                } else if (key == "prob") {
                    t.prob = probability(value, "\"prob\"");
                    has[4] = true;
                } else {
                    error("unknown transition key \"" + key + "\"", entry.key_offsets[i]);
                }
            }
            static constexpr const char* names[5] = {"from", "action", "to", "signal", "prob"};
            for (int i = 0; i < 5; ++i)
                if (!has[i]) error(std::string("transition is missing \"") + names[i] + "\"", entry.offset);
            if (!seen.emplace(t.from, t.action, t.to, t.signal).second)
                error("duplicate transition entry (" + t.from + "," + t.action + "," + t.to + "," + t.signal + ")",
                      entry.offset);
            raw.transitions.push_back(std::move(t));
        }
    }

    std::string_view text_;
};

}  // namespace

RawPomdp parse_raw_model(std::string_view text) { return DocumentReader(text).read(); }

Pomdp parse_model(std::string_view text) { return validate(parse_raw_model(text)); }

std::string serialize_model(const Pomdp& model) {
    const RawPomdp raw = model.to_raw();
    nlohmann::json doc;
    doc["revealing"] = raw.revealing;
    doc["states"] = raw.states;
    doc["actions"] = raw.actions;
    doc["signals"] = raw.signals;
    doc["transitions"] = nlohmann::json::array();
    for (const auto& t : raw.transitions)
        doc["transitions"].push_back(
            {{"from", t.from}, {"action", t.action}, {"to", t.to}, {"signal", t.signal}, {"prob", to_string(t.prob)}});
    doc["initial"] = nlohmann::json::object();
    for (const auto& [state, p] : raw.initial) doc["initial"][state] = to_string(p);
    if (raw.priorities) {
        doc["priorities"] = nlohmann::json::object();
        for (const auto& [state, p] : *raw.priorities) doc["priorities"][state] = p;
    }
    if (raw.targets) doc["targets"] = *raw.targets;
    return doc.dump(2) + "\n";
}

Pomdp load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open model file " + path.string(), 0, 0);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_model(buffer.str());
}

}  // namespace revpomdp
