#include "auditsynth/taxonomy.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "auditsynth/error.hpp"
#include "text_util.hpp"

namespace auditsynth {

namespace {

constexpr std::string_view builtin_rows = R"(# Category	Descriptor	Faker
File	ADS	0
File	ExfiltrationFolder	0
File	Payload	0
File	PayloadCopy	0
File	Phishing	0
File	Recon	0
File	Script	0
File	Shortcut	0
Network	C2	0
Network	HostIP	1
Network	HostMachine	1
Network	MailServer	0
Network	PayloadURL	0
Network	ScriptURL	0
Cmdline	Command	0
Cmdline	Content	0
Cmdline	Message	0
Process	Browser	1
Process	Explorer	1
Process	Payload	0
Process	Phishing	0
Registry	Key	0
Registry	Subkey	0
System	FirewallPort	1
System	FirewallRule	0
System	Host	1
System	Password	1
System	Product	0
System	ProxyPort	1
System	Service	0
System	Task	0
System	Time	1
System	User	1
System	Userdomain	0
)";

std::string lookup_key(std::string_view text)
{
    std::string key;
    for (char c : text)
        if (c != ' ' && c != '_')
            key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    return key;
}

} // namespace

const Taxonomy& Taxonomy::builtin()
{
    static const Taxonomy instance = parse(builtin_rows);
    return instance;
}

std::string_view Taxonomy::builtin_text() { return builtin_rows; }

Taxonomy Taxonomy::parse(std::string_view text)
{
    Taxonomy tax;
    std::size_t line_no = 0;
    for (std::string_view line : text::split_lines(text)) {
        ++line_no;
        line = text::trim(line);
        if (line.empty() || line.front() == '#')
            continue;
        auto fields = text::split(line, '\t');
        if (fields.size() != 3)
            throw Error(Errc::syntax, fmt::format("taxonomy line {}: expected 3 tab-separated fields", line_no),
                        line_no);
        auto category = parse_category(text::trim(fields[0]));
        if (!category)
            throw Error(Errc::syntax, fmt::format("taxonomy line {}: unknown category '{}'", line_no, fields[0]),
                        line_no);
        std::string name(text::trim(fields[1]));
        const auto flag = text::trim(fields[2]);
        if (name.empty() || (flag != "0" && flag != "1"))
            throw Error(Errc::syntax, fmt::format("taxonomy line {}: bad descriptor or flag", line_no), line_no);
        if (tax.find(*category, name))
            throw Error(Errc::syntax, fmt::format("taxonomy line {}: duplicate descriptor {}", line_no, name),
                        line_no);
        tax.entries_.push_back({*category, std::move(name), flag == "1"});
    }
    if (tax.entries_.empty())
        throw Error(Errc::schema, "taxonomy is empty");
    return tax;
}

Taxonomy Taxonomy::load(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(Errc::io, fmt::format("cannot open taxonomy file {}", path));
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse(buffer.str());
}

std::optional<CategoryDescriptor> Taxonomy::find(Category category, std::string_view descriptor) const
{
    const auto key = lookup_key(descriptor);
    for (const auto& entry : entries_)
        if (entry.category == category && lookup_key(entry.name) == key)
            return entry;
    return std::nullopt;
}

std::optional<CategoryDescriptor> Taxonomy::find(std::string_view token) const
{
    const auto dot = token.find('.');
    if (dot == std::string_view::npos)
        return std::nullopt;
    auto category = parse_category(token.substr(0, dot));
    if (!category)
        return std::nullopt;
    return find(*category, token.substr(dot + 1));
}

CategoryDescriptor Taxonomy::require(std::string_view token) const
{
    if (auto found = find(token))
        return *found;
    throw Error(Errc::schema, fmt::format("'{}' is not a known category.descriptor", token));
}

std::string Taxonomy::to_text() const
{
    std::string out = "# Category\tDescriptor\tFaker\n";
    for (const auto& e : entries_)
        out += fmt::format("{}\t{}\t{}\n", to_string(e.category), e.name, e.faker_generated ? 1 : 0);
    return out;
}

} // namespace auditsynth
