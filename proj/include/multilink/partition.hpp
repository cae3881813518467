#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace multilink {

// A cluster's file pattern is a K-bit mask: bit k set iff the cluster
// contains at least one record from file k.
using FilePattern = std::uint32_t;

struct Cluster {
    std::vector<std::int32_t> members;    // global record indices
    std::vector<std::int16_t> per_file;   // size K: records from each file
    FilePattern pattern = 0;

    bool active() const { return !members.empty(); }
    int size() const { return static_cast<int>(members.size()); }
};

// Partition of records from K files with O(K + |cluster|) add/remove and
// maintained summaries: cluster count n, overlap table n_h (clusters per
// nonempty file pattern h), and per-file cluster counts n_k.
class MultifilePartition {
  public:
    static constexpr int kNewCluster = -1;

    MultifilePartition(std::vector<int> file_of, int num_files);

    static MultifilePartition singletons(std::vector<int> file_of, int num_files);
    // Labels may be arbitrary ints; equal label = same cluster.
    static MultifilePartition from_labels(std::vector<int> file_of, int num_files,
                                          const std::vector<int>& labels);

    int num_records() const { return static_cast<int>(file_of_.size()); }
    int num_files() const { return K_; }
    int num_clusters() const { return num_clusters_; }
    int num_assigned() const { return num_assigned_; }

    int cluster_of(int rec) const { return cluster_of_[rec]; }
    const Cluster& cluster(int cid) const { return clusters_[cid]; }
    int file_of(int rec) const { return file_of_[rec]; }

    // n_h for a nonempty pattern h.
    int overlap_count(FilePattern h) const { return n_h_[h]; }
    const std::vector<std::int32_t>& overlap_table() const { return n_h_; }
    // n_k: clusters containing at least one record from file k.
    int file_cluster_count(int k) const { return n_k_[k]; }

    // Removes rec from its cluster (rec becomes unassigned; empty clusters
    // are recycled).
    void remove_record(int rec);
    // Adds an unassigned rec to cluster cid, or to a fresh cluster when
    // cid == kNewCluster.  Returns the cluster id used.
    int add_record(int rec, int cid);

    std::vector<int> active_cluster_ids() const;
    // Cluster labels numbered by first appearance in record order (0-based);
    // invariant under any relabelling of the input.
    std::vector<std::int32_t> canonical_labels() const;

    void check_consistency() const;  // full recount; throws on mismatch

    static FilePattern bit(int k) { return FilePattern{1} << k; }

  private:
    std::vector<int> file_of_;
    int K_ = 0;
    std::vector<Cluster> clusters_;
    std::vector<int> free_ids_;
    std::vector<int> cluster_of_;
    std::vector<std::int32_t> n_h_;  // size 1<<K
    std::vector<std::int32_t> n_k_;  // size K
    int num_clusters_ = 0;
    int num_assigned_ = 0;

    int allocate_cluster();
};

struct PartitionConstraints {
    std::vector<std::uint8_t> dup_allowed;  // per file; empty = all dup-free
    std::vector<int> max_size_per_file;     // U^k; empty = unbounded
    const std::vector<int>* block_of = nullptr;  // clusters confined to blocks

    bool allows_join(const MultifilePartition& part, int cid, int rec) const;
};

// Visits every partition of the records satisfying the constraints, exactly
// once, by restricted growth over records in index order.  Test oracle:
// refuses more than 12 records.
void enumerate_partitions(const std::vector<int>& file_of, int num_files,
                          const PartitionConstraints& constraints,
                          const std::function<void(const MultifilePartition&)>& visit);

}  // namespace multilink
