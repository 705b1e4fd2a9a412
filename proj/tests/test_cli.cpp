#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>

#include "audit_oracles.hpp"
#include "support.hpp"

namespace {

struct Outcome {
    int code = -1;
    std::string out, err;
};

Outcome cli(const std::string& args, const testsupport::TempDir& dir)
{
    const auto out = dir.path / "stdout.txt";
    const auto err = dir.path / "stderr.txt";
    const auto cmd = std::string(AUDITSYNTH_CLI) + " " + args + " >" + out.string() + " 2>" + err.string();
    const int status = std::system(cmd.c_str());
    Outcome o;
    o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    o.out = testsupport::read_file(out);
    o.err = testsupport::read_file(err);
    return o;
}

std::string config(const char* name)
{
    return (testsupport::config_dir() / name).string();
}

} // namespace

TEST_CASE("generate, validate and stats on the quick config")
{
    testsupport::TempDir dir("cli");
    const auto out = dir.path / "run";
    auto g = cli("-q generate -c " + config("quick.yaml") + " -o " + out.string(), dir);
    REQUIRE(g.code == 0);
    CHECK(g.out.find("Synthesizing APT Campaign:") != std::string::npos);
    for (auto f : {"synthetic.csv", "synthetic.labels.jsonl", "manifest.csv", "stats.txt"})
        CHECK(std::filesystem::exists(out / f));

    auto v = cli("validate " + out.string(), dir);
    CHECK(v.code == 0);
    CHECK(v.out == "valid\n");

    auto s = cli("stats " + out.string(), dir);
    CHECK(s.code == 0);
    CHECK(s.out == testsupport::read_file(out / "stats.txt"));

    // Same seed, same bytes; a different seed changes the log.
    const auto again = dir.path / "again";
    REQUIRE(cli("-q generate -c " + config("quick.yaml") + " -j 4 -o " + again.string(), dir).code == 0);
    CHECK(testsupport::read_file(again / "synthetic.csv") == testsupport::read_file(out / "synthetic.csv"));
    const auto other = dir.path / "other";
    REQUIRE(cli("-q generate -c " + config("quick.yaml") + " -s 8 -o " + other.string(), dir).code == 0);
    CHECK(testsupport::read_file(other / "synthetic.csv") != testsupport::read_file(out / "synthetic.csv"));

    // Sparse sidecar validates against the same log.
    const auto sparse = dir.path / "sparse";
    REQUIRE(cli("-q generate --sparse -c " + config("quick.yaml") + " -o " + sparse.string(), dir).code == 0);
    CHECK(cli("validate " + sparse.string(), dir).code == 0);
    CHECK(testsupport::read_file(sparse / "synthetic.labels.jsonl").size() <
          testsupport::read_file(out / "synthetic.labels.jsonl").size());
}

TEST_CASE("validate flags a broken sidecar")
{
    testsupport::TempDir dir("cli-bad");
    const auto out = dir.path / "run";
    REQUIRE(cli("-q generate -c " + config("quick.yaml") + " -o " + out.string(), dir).code == 0);

    // Turn the first B- record into an orphaned I- record.
    auto labels = testsupport::read_file(out / "synthetic.labels.jsonl");
    const auto pos = labels.find("\"B-");
    REQUIRE(pos != std::string::npos);
    const auto line_start = labels.rfind('\n', pos) + 1;
    const auto index = std::stoull(labels.substr(labels.find(':', line_start) + 1));
    for (auto p = labels.find("\"B-", line_start); p != std::string::npos && p < labels.find('\n', line_start);
         p = labels.find("\"B-", p + 1))
        labels[p + 1] = 'I';
    std::ofstream(out / "synthetic.labels.jsonl", std::ios::binary) << labels;

    auto v = cli("validate " + out.string(), dir);
    CHECK(v.code == 8);
    CHECK(v.err.find("index " + std::to_string(index)) != std::string::npos);
}

TEST_CASE("error exit codes")
{
    testsupport::TempDir dir("cli-err");
    std::ofstream(dir.path / "bad.yaml") << "templates: t\ncorpus: c\nbackground: b\nbogus: 1\n";
    auto bad = cli("generate -c " + (dir.path / "bad.yaml").string() + " -o " + (dir.path / "x").string(), dir);
    CHECK(bad.code == 2);
    CHECK(bad.err.find("bogus") != std::string::npos);

    std::ofstream(dir.path / "lc.yaml") << "templates: " << (testsupport::data_dir() / "templates").string()
                                        << "\ncorpus: " << (testsupport::data_dir() / "corpus/sample_corpus.tsv").string()
                                        << "\nbackground: " << (testsupport::data_dir() / "background/ambient.csv").string()
                                        << "\ncampaigns:\n  - id: A\n    stages: [1, 7]\n";
    CHECK(cli("generate -c " + (dir.path / "lc.yaml").string() + " -o " + (dir.path / "y").string(), dir).code == 4);

    std::ofstream(dir.path / "bad.tpl") << "not a template\n";
    CHECK(cli("validate --template " + (dir.path / "bad.tpl").string(), dir).code == 3);
    CHECK(cli("validate --template " + (testsupport::data_dir() / "templates/ic_pa.tpl").string(), dir).code == 0);
}

TEST_CASE("abstract turns a trace into a template")
{
    testsupport::TempDir dir("cli-abs");
    const auto trace = dir.path / "trace.csv";
    std::ofstream(trace, std::ios::binary)
        << "Time,Process Name,PID,Operation,Path,Result,Detail\r\n"
           "2024-03-01T09:00:00.000000Z,firefox.exe,3116,TCP Receive,imap.gmail.com:993,SUCCESS,\r\n"
           "2024-03-01T09:00:00.000500Z,firefox.exe,3116,CreateFile,IOC_09_11.rar,SUCCESS,\r\n";
    const auto corpus = (testsupport::data_dir() / "corpus/sample_corpus.tsv").string();
    const auto tpl = dir.path / "pa.tpl";
    auto a = cli("abstract " + trace.string() + " --stage IC --technique T1566.001 --ability PA --corpus " + corpus +
                     " -o " + tpl.string(),
                 dir);
    REQUIRE(a.code == 0);
    const auto text = testsupport::read_file(tpl);
    CHECK(text.find("T1566.001") != std::string::npos);
    CHECK(text.find("File.Phishing") != std::string::npos);
    CHECK(cli("validate --template " + tpl.string(), dir).code == 0);

    // Entities outside the corpus and table cannot be abstracted.
    std::ofstream(dir.path / "unknown.csv", std::ios::binary)
        << "Time,Process Name,PID,Operation,Path,Result,Detail\r\n"
           "2024-03-01T09:00:00.000000Z,firefox.exe,3116,TCP Receive,mail.example.org,SUCCESS,\r\n";
    auto unknown = cli("abstract " + (dir.path / "unknown.csv").string() +
                           " --stage IC --technique T1566.001 --ability PA --corpus " + corpus,
                       dir);
    CHECK(unknown.code == 6);
    CHECK(unknown.err.find("mail.example.org") != std::string::npos);

    std::ofstream(dir.path / "empty.csv", std::ios::binary) << "Time,Process Name,PID,Operation,Path,Result,Detail\r\n";
    CHECK(cli("abstract " + (dir.path / "empty.csv").string() + " --stage IC --technique T1 --ability X", dir).code ==
          6);
}
