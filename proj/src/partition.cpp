#include "multilink/partition.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>

namespace multilink {

MultifilePartition::MultifilePartition(std::vector<int> file_of, int num_files)
    : file_of_(std::move(file_of)), K_(num_files) {
    if (K_ <= 0 || K_ > 16)
        throw std::invalid_argument("number of files must be in 1..16");
    for (int k : file_of_)
        if (k < 0 || k >= K_)
            throw std::invalid_argument("record file index out of range");
    cluster_of_.assign(file_of_.size(), -1);
    n_h_.assign(std::size_t(1) << K_, 0);
    n_k_.assign(K_, 0);
}

MultifilePartition MultifilePartition::singletons(std::vector<int> file_of,
                                                  int num_files) {
    MultifilePartition p(std::move(file_of), num_files);
    for (int i = 0; i < p.num_records(); ++i) p.add_record(i, kNewCluster);
    return p;
}

MultifilePartition MultifilePartition::from_labels(std::vector<int> file_of,
                                                   int num_files,
                                                   const std::vector<int>& labels) {
    MultifilePartition p(std::move(file_of), num_files);
    if (labels.size() != std::size_t(p.num_records()))
        throw std::invalid_argument("label vector length != record count");
    std::map<int, int> cid_of_label;
    for (int i = 0; i < p.num_records(); ++i) {
        auto it = cid_of_label.find(labels[i]);
        if (it == cid_of_label.end())
            cid_of_label[labels[i]] = p.add_record(i, kNewCluster);
        else
            p.add_record(i, it->second);
    }
    return p;
}

int MultifilePartition::allocate_cluster() {
    if (!free_ids_.empty()) {
        int cid = free_ids_.back();
        free_ids_.pop_back();
        return cid;
    }
    clusters_.push_back(Cluster{{}, std::vector<std::int16_t>(K_, 0), 0});
    return static_cast<int>(clusters_.size()) - 1;
}

void MultifilePartition::remove_record(int rec) {
    int cid = cluster_of_[rec];
    if (cid < 0) throw std::logic_error("remove_record: record not assigned");
    Cluster& c = clusters_[cid];
    auto it = std::find(c.members.begin(), c.members.end(), rec);
    if (it == c.members.end())
        throw std::logic_error("remove_record: membership table corrupt");
    *it = c.members.back();
    c.members.pop_back();
    cluster_of_[rec] = -1;
    --num_assigned_;

    const int k = file_of_[rec];
    const FilePattern before = c.pattern;
    if (--c.per_file[k] == 0) c.pattern &= ~bit(k);

    --n_h_[before];
    if (c.members.empty()) {
        // cluster vanishes: `before` had only file k set
        --n_k_[k];
        --num_clusters_;
        free_ids_.push_back(cid);
    } else {
        ++n_h_[c.pattern];
        if (c.pattern != before) --n_k_[k];
    }
}

int MultifilePartition::add_record(int rec, int cid) {
    if (cluster_of_[rec] >= 0)
        throw std::logic_error("add_record: record already assigned");
    if (cid == kNewCluster) {
        cid = allocate_cluster();
        ++num_clusters_;
    } else if (cid < 0 || cid >= static_cast<int>(clusters_.size()) ||
               !clusters_[cid].active()) {
        throw std::logic_error("add_record: no such cluster");
    }
    Cluster& c = clusters_[cid];
    const int k = file_of_[rec];
    const FilePattern before = c.pattern;
    c.members.push_back(rec);
    if (c.per_file[k]++ == 0) c.pattern |= bit(k);
    if (before != 0) --n_h_[before];
    ++n_h_[c.pattern];
    if (c.pattern != before) ++n_k_[k];
    cluster_of_[rec] = cid;
    ++num_assigned_;
    return cid;
}

std::vector<int> MultifilePartition::active_cluster_ids() const {
    std::vector<int> ids;
    for (std::size_t c = 0; c < clusters_.size(); ++c)
        if (clusters_[c].active()) ids.push_back(static_cast<int>(c));
    return ids;
}

std::vector<std::int32_t> MultifilePartition::canonical_labels() const {
    std::vector<std::int32_t> labels(num_records(), -1);
    std::vector<std::int32_t> label_of_cluster(clusters_.size(), -1);
    std::int32_t next = 0;
    for (int i = 0; i < num_records(); ++i) {
        int cid = cluster_of_[i];
        if (cid < 0) throw std::logic_error("canonical_labels: unassigned record");
        if (label_of_cluster[cid] < 0) label_of_cluster[cid] = next++;
        labels[i] = label_of_cluster[cid];
    }
    return labels;
}

void MultifilePartition::check_consistency() const {
    std::vector<std::int32_t> nh(std::size_t(1) << K_, 0);
    std::vector<std::int32_t> nk(K_, 0);
    int n = 0, assigned = 0;
    for (std::size_t c = 0; c < clusters_.size(); ++c) {
        const Cluster& cl = clusters_[c];
        if (!cl.active()) continue;
        ++n;
        std::vector<std::int16_t> pf(K_, 0);
        for (int rec : cl.members) {
            if (cluster_of_[rec] != static_cast<int>(c))
                throw std::logic_error("partition: cluster_of mismatch");
            ++pf[file_of_[rec]];
            ++assigned;
        }
        FilePattern pat = 0;
        for (int k = 0; k < K_; ++k) {
            if (pf[k] != cl.per_file[k])
                throw std::logic_error("partition: per-file count mismatch");
            if (pf[k] > 0) pat |= bit(k);
        }
        if (pat != cl.pattern) throw std::logic_error("partition: pattern mismatch");
        ++nh[pat];
        for (int k = 0; k < K_; ++k)
            if (pat & bit(k)) ++nk[k];
    }
    if (n != num_clusters_) throw std::logic_error("partition: cluster count mismatch");
    if (assigned != num_assigned_)
        throw std::logic_error("partition: assigned count mismatch");
    if (nh != n_h_) throw std::logic_error("partition: overlap table mismatch");
    if (nk != n_k_) throw std::logic_error("partition: per-file counts mismatch");
}

bool PartitionConstraints::allows_join(const MultifilePartition& part, int cid,
                                       int rec) const {
    const Cluster& c = part.cluster(cid);
    const int k = part.file_of(rec);
    const bool dups_ok = !dup_allowed.empty() && dup_allowed[k] != 0;
    if (!dups_ok && c.per_file[k] > 0) return false;
    if (!max_size_per_file.empty() && c.per_file[k] + 1 > max_size_per_file[k])
        return false;
    if (block_of &&
        (*block_of)[c.members.front()] != (*block_of)[rec])
        return false;
    return true;
}

namespace {

void enumerate_rec(MultifilePartition& part, int rec,
                   const PartitionConstraints& cons,
                   std::vector<int>& created_order,
                   const std::function<void(const MultifilePartition&)>& visit) {
    if (rec == part.num_records()) {
        visit(part);
        return;
    }
    // Deeper levels push/pop on created_order, so iterate by index over the
    // clusters that exist now; range-for iterators would dangle on regrowth.
    const std::size_t existing = created_order.size();
    for (std::size_t t = 0; t < existing; ++t) {
        const int cid = created_order[t];
        if (!cons.allows_join(part, cid, rec)) continue;
        part.add_record(rec, cid);
        enumerate_rec(part, rec + 1, cons, created_order, visit);
        part.remove_record(rec);
    }
    if (cons.max_size_per_file.empty() ||
        cons.max_size_per_file[part.file_of(rec)] >= 1) {
        int cid = part.add_record(rec, MultifilePartition::kNewCluster);
        created_order.push_back(cid);
        enumerate_rec(part, rec + 1, cons, created_order, visit);
        created_order.pop_back();
        part.remove_record(rec);
    }
}

}  // namespace

void enumerate_partitions(const std::vector<int>& file_of, int num_files,
                          const PartitionConstraints& constraints,
                          const std::function<void(const MultifilePartition&)>& visit) {
    if (file_of.size() > 12)
        throw std::invalid_argument(
            "enumerate_partitions is a test oracle; refusing more than 12 records");
    MultifilePartition part(file_of, num_files);
    std::vector<int> created_order;
    enumerate_rec(part, 0, constraints, created_order, visit);
}

}  // namespace multilink
