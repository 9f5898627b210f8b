"""Visualizer - Plots of graph statistics, training loss and parameter sensitivity."""

import csv
import logging

import matplotlib.pyplot as plt
import numpy as np

from .graph import attribute_count_histogram, degree_histogram

logger = logging.getLogger(__name__)


class Visualizer:
    """Renders diagnostic figures to image files (or to screen when no path is given)."""

    def __init__(self, figsize=(8, 6), dpi=100):
        """Initialize visualizer.

        Args:
            figsize: Figure size in inches
            dpi: Resolution of saved images
        """
        self.figsize = figsize
        self.dpi = dpi

        plt.style.use('default')
        plt.rcParams['font.size'] = 10

    def _finish(self, fig, path):
        fig.tight_layout()
        if path is None:
            plt.show()
        else:
            fig.savefig(path, dpi=self.dpi)
            logger.info("Saved figure to %s", path)
        plt.close(fig)
        return path

    def plot_distribution(self, histogram, title, xlabel, path=None):
        """Log-log scatter of a value -> count histogram.

        Zero keys cannot be drawn on a log axis and are left out of the plot.

        Args:
            histogram: Dict mapping value -> number of nodes
            title: Figure title
            xlabel: Label of the value axis
            path: Output image path, or None to show the figure

        Returns:
            The path written, or None when there is nothing to plot
        """
        points = sorted((k, c) for k, c in histogram.items() if k > 0 and c > 0)
        if not points:
            logger.warning("No positive values to plot for %s", title)
            return None

        keys, counts = zip(*points)
        fig, ax = plt.subplots(figsize=self.figsize)
        ax.scatter(keys, counts, color='steelblue', alpha=0.8, s=20)
        ax.set_xscale('log')
        ax.set_yscale('log')
        ax.set_title(title)
        ax.set_xlabel(xlabel)
        ax.set_ylabel('Number of nodes')
        ax.grid(True, which='both', alpha=0.3)

        isolated = histogram.get(0, 0)
        if isolated:
            ax.text(0.98, 0.98, f"{isolated} nodes at 0 not shown", transform=ax.transAxes,
                    ha='right', va='top', bbox=dict(boxstyle='round', facecolor='wheat', alpha=0.8))
        return self._finish(fig, path)

    def plot_degree_distribution(self, graph, path=None):
        return self.plot_distribution(degree_histogram(graph), 'Degree Distribution', 'Degree', path)

    def plot_attribute_distribution(self, graph, path=None):
        return self.plot_distribution(attribute_count_histogram(graph),
                                      'Attribute Count Distribution',
                                      'Nonzero attributes per node', path)

    def plot_loss_curve(self, history, path=None):
        """Running loss (left axis) and learning rate (right axis) against iteration.

        Args:
            history: Sequence of (iteration, learning_rate, running_loss)
            path: Output image path, or None to show the figure
        """
        if not history:
            logger.warning("No training history to plot")
            return None

        iterations, rates, losses = (np.asarray(column) for column in zip(*history))
        fig, ax1 = plt.subplots(figsize=self.figsize)
        ax1.set_title('Training Loss')
        ax1.plot(iterations, losses, 'b-', linewidth=2, label='Running loss')
        ax1.set_xlabel('Iteration')
        ax1.set_ylabel('Loss per pair')
        ax1.grid(True, alpha=0.3)

        ax2 = ax1.twinx()
        ax2.plot(iterations, rates, 'r--', linewidth=1, label='Learning rate')
        ax2.set_ylabel('Learning rate')

        handles = ax1.get_legend_handles_labels()[0] + ax2.get_legend_handles_labels()[0]
        ax1.legend(handles, [h.get_label() for h in handles], loc='upper right')
        return self._finish(fig, path)

    def plot_sensitivity(self, parameter, values, scores, path=None):
        """Metric curves over the values of one hyperparameter.

        Args:
            parameter: Hyperparameter name for the x axis
            values: Hyperparameter values
            scores: Dict metric name -> list of metric values (one per value)
            path: Output image path, or None to show the figure
        """
        if not values or not scores:
            logger.warning("No sensitivity data to plot")
            return None

        fig, ax = plt.subplots(figsize=self.figsize)
        ax.set_title(f"Sensitivity to {parameter}")
        for metric, series in scores.items():
            ax.plot(values, [100 * s for s in series], 'o-', linewidth=2, markersize=5, label=metric)
        ax.set_xlabel(parameter)
        ax.set_ylabel('Score (%)')
        ax.grid(True, alpha=0.3)
        ax.legend()
        return self._finish(fig, path)

    def export_loss_history(self, history, filename):
        """Export (iteration, learning_rate, loss) rows to a CSV file.

        Args:
            history: Sequence of (iteration, learning_rate, running_loss)
            filename: Output CSV filename
        """
        with open(filename, 'w', newline='', encoding='utf-8') as csvfile:
            writer = csv.writer(csvfile)
            writer.writerow(['iteration', 'learning_rate', 'loss'])
            for iteration, rate, loss in history:
                writer.writerow([iteration, rate, loss])
        logger.info("Loss history exported to %s", filename)

    def get_summary_stats(self, history):
        """Summary of a loss history.

        Returns:
            dict: Summary statistics ({} for an empty history)
        """
        if not history:
            return {}
        losses = np.array([loss for _, _, loss in history])
        return {
            'windows': len(losses),
            'iterations': int(history[-1][0]),
            'first_loss': float(losses[0]),
            'final_loss': float(losses[-1]),
            'min_loss': float(losses.min()),
            'mean_loss': float(losses.mean()),
        }
