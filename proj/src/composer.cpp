#include "auditsynth/composer.hpp"

#include <algorithm>
#include <atomic>
#include <cstring>
#include <fstream>
#include <queue>

#include <unistd.h>

#include <fmt/format.h>

#include "auditsynth/csv.hpp"
#include "auditsynth/error.hpp"
#include "auditsynth/log.hpp"
#include "auditsynth/operations.hpp"
#include "text_util.hpp"

namespace auditsynth {

namespace {

constexpr std::uint64_t prefix_key_flag = 1ULL << 63;

std::uint64_t technique_key(std::size_t step, std::uint64_t local) { return ((step + 1) << 32) | local; }
std::uint64_t prefix_key(std::size_t step, std::uint64_t raw)
{
    return prefix_key_flag | ((step + 1) << 32) | (raw & 0xffffffffULL);
}

std::optional<std::uint64_t> root_pid_for(std::string_view name)
{
    if (iequals(name, "explorer.exe"))
        return explorer_pid;
    if (iequals(name, "services.exe"))
        return services_pid;
    return std::nullopt;
}

std::string root_name(std::uint64_t pid) { return pid == explorer_pid ? "explorer.exe" : "services.exe"; }

std::string with_child_pid(std::string_view detail, std::uint64_t pid)
{
    if (text::starts_with_ci(detail, "PID: ")) {
        std::size_t i = 5;
        while (i < detail.size() && detail[i] >= '0' && detail[i] <= '9')
            ++i;
        return fmt::format("PID: {}{}", pid, detail.substr(i));
    }
    if (detail.empty())
        return fmt::format("PID: {}", pid);
    return fmt::format("PID: {}, {}", pid, detail);
}

// Binary spill record format; strings are length-prefixed.
class SpillWriter {
public:
    explicit SpillWriter(const std::filesystem::path& path) : out_(path, std::ios::binary)
    {
        if (!out_)
            throw Error(Errc::io, fmt::format("cannot create spill file {}", path.string()));
    }
    void write(const Event& e)
    {
        u64(e.seq);
        u64(static_cast<std::uint64_t>(e.time_us));
        entity(e.subject);
        u64(e.pid);
        str(e.operation);
        entity(e.object);
        str(e.result);
        str(e.detail);
        str(e.label.stage_tag);
        str(e.label.technique_tag);
        str(e.label.ability_tag);
        u8(e.campaign_id.has_value());
        if (e.campaign_id)
            str(*e.campaign_id);
        u64(e.child_local);
    }
    void close()
    {
        out_.close();
        if (!out_)
            throw Error(Errc::io, "failed to write spill file");
    }

private:
    void u8(std::uint8_t v) { out_.put(static_cast<char>(v)); }
    void u64(std::uint64_t v) { out_.write(reinterpret_cast<const char*>(&v), sizeof v); }
    void str(const std::string& s)
    {
        const auto n = static_cast<std::uint32_t>(s.size());
        out_.write(reinterpret_cast<const char*>(&n), sizeof n);
        out_.write(s.data(), n);
    }
    void entity(const SystemEntity& s)
    {
        u8(static_cast<std::uint8_t>(s.kind));
        str(s.value);
        u8(s.descriptor.has_value());
        if (s.descriptor) {
            u8(static_cast<std::uint8_t>(s.descriptor->category));
            str(s.descriptor->name);
            u8(s.descriptor->faker_generated);
        }
    }
    std::ofstream out_;
};

class SpillReader {
public:
    explicit SpillReader(const std::filesystem::path& path) : in_(path, std::ios::binary)
    {
        if (!in_)
            throw Error(Errc::io, fmt::format("cannot open spill file {}", path.string()));
    }
    bool read(Event& e)
    {
        if (in_.peek() == std::char_traits<char>::eof())
            return false;
        e.seq = u64();
        e.time_us = static_cast<std::int64_t>(u64());
        entity(e.subject);
        e.pid = u64();
        str(e.operation);
        entity(e.object);
        str(e.result);
        str(e.detail);
        str(e.label.stage_tag);
        str(e.label.technique_tag);
        str(e.label.ability_tag);
        if (u8()) {
            e.campaign_id.emplace();
            str(*e.campaign_id);
        } else {
            e.campaign_id.reset();
        }
        e.child_local = u64();
        if (!in_)
            throw Error(Errc::io, "truncated spill file");
        return true;
    }

private:
    std::uint8_t u8() { return static_cast<std::uint8_t>(in_.get()); }
    std::uint64_t u64()
    {
        std::uint64_t v = 0;
        in_.read(reinterpret_cast<char*>(&v), sizeof v);
        return v;
    }
    void str(std::string& s)
    {
        std::uint32_t n = 0;
        in_.read(reinterpret_cast<char*>(&n), sizeof n);
        s.resize(n);
        in_.read(s.data(), n);
    }
    void entity(SystemEntity& s)
    {
        s.kind = static_cast<EntityKind>(u8());
        str(s.value);
        if (u8()) {
            CategoryDescriptor d;
            d.category = static_cast<Category>(u8());
            str(d.name);
            d.faker_generated = u8() != 0;
            s.descriptor = std::move(d);
        } else {
            s.descriptor.reset();
        }
    }
    std::ifstream in_;
};

class MergeSource {
public:
    virtual ~MergeSource() = default;
    virtual const Event* peek() const = 0;
    virtual void pop() = 0;
};

class VectorSource final : public MergeSource {
public:
    explicit VectorSource(const std::vector<Event>& v) : v_(v) {}
    const Event* peek() const override { return i_ < v_.size() ? &v_[i_] : nullptr; }
    void pop() override { ++i_; }

private:
    const std::vector<Event>& v_;
    std::size_t i_ = 0;
};

class FileSource final : public MergeSource {
public:
    explicit FileSource(const std::filesystem::path& p) : reader_(p) { pop(); }
    const Event* peek() const override { return has_ ? &current_ : nullptr; }
    void pop() override { has_ = reader_.read(current_); }

private:
    SpillReader reader_;
    Event current_;
    bool has_ = false;
};

void merge_sources(std::vector<std::unique_ptr<MergeSource>>& sources, const std::function<void(const Event&)>& fn)
{
    auto greater = [&](std::size_t a, std::size_t b) { return compare_events(*sources[a]->peek(), *sources[b]->peek()) > 0; };
    std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(greater)> heap(greater);
    for (std::size_t i = 0; i < sources.size(); ++i)
        if (sources[i]->peek())
            heap.push(i);
    while (!heap.empty()) {
        const auto i = heap.top();
        heap.pop();
        fn(*sources[i]->peek());
        sources[i]->pop();
        if (sources[i]->peek())
            heap.push(i);
    }
}

} // namespace

// Owns a private spill directory and removes it when the last user goes away.
class SpillStore {
public:
    explicit SpillStore(const std::filesystem::path& parent)
    {
        static std::atomic<unsigned> counter{0};
        dir_ = parent / fmt::format("auditsynth-spill-{}-{}", static_cast<long>(::getpid()), counter++);
        std::filesystem::create_directories(dir_);
    }
    ~SpillStore()
    {
        std::error_code ec;
        std::filesystem::remove_all(dir_, ec);
    }
    SpillStore(const SpillStore&) = delete;
    SpillStore& operator=(const SpillStore&) = delete;

    std::filesystem::path next_path() { return files_.emplace_back(dir_ / fmt::format("segment-{}.bin", files_.size())); }
    const std::vector<std::filesystem::path>& files() const { return files_; }

private:
    std::filesystem::path dir_;
    std::vector<std::filesystem::path> files_;
};

void OrderedLog::for_each(const std::function<void(const Event&)>& fn) const
{
    std::vector<std::unique_ptr<MergeSource>> sources;
    if (spill_)
        for (const auto& f : spill_->files())
            sources.push_back(std::make_unique<FileSource>(f));
    for (const auto& r : runs_)
        sources.push_back(std::make_unique<VectorSource>(r));
    std::uint64_t seq = 0;
    Event scratch;
    merge_sources(sources, [&](const Event& e) {
        scratch = e;
        scratch.seq = seq++;
        fn(scratch);
    });
}

std::vector<Event> OrderedLog::to_vector() const
{
    std::vector<Event> out;
    out.reserve(size_);
    for_each([&](const Event& e) { out.push_back(e); });
    return out;
}

SyntheticLog::SyntheticLog(SyntheticLogOptions options) : options_(std::move(options)) {}
SyntheticLog::~SyntheticLog() = default;
SyntheticLog::SyntheticLog(SyntheticLog&&) noexcept = default;
SyntheticLog& SyntheticLog::operator=(SyntheticLog&&) noexcept = default;

std::size_t SyntheticLog::spill_count() const { return spill_ ? spill_->files().size() : 0; }

void SyntheticLog::add_run(std::vector<Event> events)
{
    if (events.empty())
        return;
    const auto n = events.size();
    const auto base = next_seq_;
    for (std::size_t i = 0; i < n; ++i)
        events[i].seq = base + i;
    // Half of the block is reserved for lineage events added at link time.
    next_seq_ += 2 * n;
    std::stable_sort(events.begin(), events.end(), EventLess{});
    in_memory_ += n;
    total_ += n;
    runs_.push_back({std::move(events), base, !options_.link});
    if (in_memory_ > options_.max_mem_events)
        spill();
}

void SyntheticLog::link_run(std::vector<Event>& run, std::uint64_t seq_base)
{
    const auto n = run.size();
    std::map<std::uint64_t, std::uint64_t> pids;
    std::vector<Event> created;

    auto allocate = [&](std::uint64_t key, std::string_view name) {
        std::uint64_t pid;
        if (auto root = root_pid_for(name))
            pid = *root;
        else
            pid = next_pid_++;
        pids.emplace(key, pid);
        registry_.emplace(pid, std::string(name));
        return pid;
    };

    for (auto& e : run) {
        auto it = pids.find(e.pid);
        std::uint64_t pid;
        if (it != pids.end()) {
            pid = it->second;
        } else {
            pid = allocate(e.pid, e.subject.value);
            if (pid != explorer_pid && pid != services_pid) {
                const auto parent = e.label.is_outside() ? services_pid : explorer_pid;
                Event c;
                c.seq = seq_base + n + created.size();
                c.time_us = e.time_us - 1;
                c.subject = {EntityKind::process, root_name(parent), std::nullopt};
                c.pid = parent;
                c.operation = std::string(process_create_op);
                c.object = {EntityKind::process, e.subject.value, e.subject.descriptor};
                c.result = "SUCCESS";
                c.detail = fmt::format("PID: {}", pid);
                created.push_back(std::move(c));
                lineage_.emplace_back(parent, pid);
            }
        }
        e.pid = pid;
        if (e.operation == process_create_op && e.child_local != 0) {
            auto ct = pids.find(e.child_local);
            const auto child = ct != pids.end() ? ct->second : allocate(e.child_local, e.object.value);
            lineage_.emplace_back(pid, child);
            e.detail = with_child_pid(e.detail, child);
        }
        e.child_local = 0;
    }
    if (!created.empty()) {
        for (auto& c : created)
            run.push_back(std::move(c));
        std::sort(run.begin(), run.end(), EventLess{});
    }
}

void SyntheticLog::link_processes()
{
    for (auto& r : runs_) {
        if (r.linked)
            continue;
        const auto before = r.events.size();
        link_run(r.events, r.seq_base);
        const auto added = r.events.size() - before;
        in_memory_ += added;
        total_ += added;
        r.linked = true;
    }
}

void SyntheticLog::spill()
{
    link_processes();
    if (!spill_)
        spill_ = std::make_shared<SpillStore>(options_.spill_dir);
    const auto path = spill_->next_path();
    {
        std::vector<std::unique_ptr<MergeSource>> sources;
        for (const auto& r : runs_)
            sources.push_back(std::make_unique<VectorSource>(r.events));
        SpillWriter w(path);
        merge_sources(sources, [&](const Event& e) { w.write(e); });
        w.close();
    }
    log_info(fmt::format("spilled {} events to {}", in_memory_, path.string()));
    runs_.clear();
    in_memory_ = 0;
}

OrderedLog SyntheticLog::finalize()
{
    link_processes();
    OrderedLog out;
    for (auto& r : runs_)
        out.runs_.push_back(std::move(r.events));
    runs_.clear();
    out.spill_ = spill_;
    out.size_ = total_;
    in_memory_ = 0;
    return out;
}

std::optional<std::uint64_t> detail_child_pid(std::string_view detail)
{
    if (!text::starts_with_ci(detail, "PID: "))
        return std::nullopt;
    std::size_t i = 5;
    while (i < detail.size() && detail[i] >= '0' && detail[i] <= '9')
        ++i;
    return text::parse_int<std::uint64_t>(detail.substr(5, i - 5));
}

BenignLog load_benign_log(std::istream& in, std::int64_t start_us, std::int64_t slack_us)
{
    BenignLog log;
    log.start_us = start_us;
    std::int64_t latest = 0;
    read_procmon_csv(in, [&](Event&& e) {
        const auto row = log.events.size() + 1;
        if (!log.events.empty() && e.time_us < latest - slack_us)
            throw Error(Errc::non_monotonic_time,
                        fmt::format("row {}: time {} precedes the previous row", row, format_timestamp(e.time_us)), row);
        latest = log.events.empty() ? e.time_us : std::max(latest, e.time_us);
        e.child_local = 0;
        if (e.operation == process_create_op)
            e.child_local = detail_child_pid(e.detail).value_or(0);
        log.events.push_back(std::move(e));
    });
    if (log.events.empty())
        return log;
    std::stable_sort(log.events.begin(), log.events.end(),
                     [](const Event& a, const Event& b) { return a.time_us < b.time_us; });
    const auto base = log.events.front().time_us;
    for (auto& e : log.events) {
        e.time_us -= base;
        e.label = LabelTriple::outside();
        e.campaign_id.reset();
    }
    log.length_us = log.events.back().time_us;
    return log;
}

BenignLog load_benign_file(const std::filesystem::path& path, std::int64_t start_us, std::int64_t slack_us)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(Errc::io, fmt::format("cannot open {}", path.string()));
    try {
        auto log = load_benign_log(in, start_us, slack_us);
        log.name = path.filename().string();
        return log;
    } catch (const Error& e) {
        throw Error(e.code(), fmt::format("{}: {}", path.string(), e.what()), e.position());
    }
}

BackgroundPool BackgroundPool::from(BenignLog log)
{
    BackgroundPool pool;
    pool.events = std::move(log.events);
    pool.length_us = log.length_us;
    return pool;
}

void compose_benign(SyntheticLog& sa, const BenignLog& ba)
{
    std::vector<Event> run;
    run.reserve(ba.events.size());
    for (const auto& e : ba.events) {
        run.push_back(e);
        run.back().time_us = ba.start_us + e.time_us;
    }
    sa.add_run(std::move(run));
}

std::size_t compose_background(SyntheticLog& sa, const BackgroundPool& pool, std::int64_t start_us,
                               std::int64_t duration_us)
{
    if (pool.events.empty())
        throw Error(Errc::empty_background, "background pool is empty");
    const auto end_us = start_us + duration_us;
    const auto period = pool.length_us + 1;
    std::size_t added = 0;
    for (std::int64_t tile_start = start_us; tile_start < end_us; tile_start += period) {
        std::vector<Event> run;
        run.reserve(pool.events.size());
        for (const auto& e : pool.events) {
            const auto t = tile_start + e.time_us;
            if (t >= end_us)
                break;
            run.push_back(e);
            run.back().time_us = t;
        }
        added += run.size();
        sa.add_run(std::move(run));
    }
    return added;
}

void compose_malicious(SyntheticLog& sa, MaliciousSequence& ma, const BackgroundPool& pool, Rng& rng)
{
    std::vector<Event> run;
    std::int64_t end = ma.start_us;
    for (std::size_t j = 0; j < ma.steps.size(); ++j) {
        auto& step = ma.steps[j];
        auto& tq = step.tq;
        const auto start = end + tq.lapse_us;
        if (step.prefix_len > 0 && tq.lapse_us < 2)
            throw Error(Errc::lapse_too_small,
                        fmt::format("campaign {} step {}: lapse {} us cannot hold {} prefix events", ma.campaign_id, j,
                                    tq.lapse_us, step.prefix_len),
                        j);
        step.prefix.clear();
        if (step.prefix_len > 0) {
            if (pool.events.empty())
                throw Error(Errc::empty_background, "benign prefixes need a non-empty background pool");
            const auto first = rng.below(pool.events.size());
            std::vector<std::int64_t> times;
            for (std::size_t k = 0; k < step.prefix_len; ++k)
                times.push_back(rng.between(end + 1, start - 1));
            std::sort(times.begin(), times.end());
            for (std::size_t k = 0; k < step.prefix_len; ++k) {
                Event e = pool.events[(first + k) % pool.events.size()];
                e.time_us = times[k];
                e.pid = prefix_key(j, e.pid);
                e.child_local = e.child_local ? prefix_key(j, e.child_local) : 0;
                e.label = LabelTriple::outside();
                e.campaign_id.reset();
                step.prefix.push_back(e);
                run.push_back(std::move(e));
            }
        }
        tq.start_us = start;
        for (std::size_t k = 0; k < tq.events.size(); ++k) {
            Event e = tq.events[k];
            e.time_us = start + tq.relative_us[k];
            e.pid = technique_key(j, e.pid);
            e.child_local = e.child_local ? technique_key(j, e.child_local) : 0;
            run.push_back(std::move(e));
        }
        tq.end_us = start + (tq.relative_us.empty() ? 0 : tq.relative_us.back());
        end = tq.end_us;
    }
    sa.add_run(std::move(run));
}

} // namespace auditsynth
