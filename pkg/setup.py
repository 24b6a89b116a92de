from setuptools import setup

setup(
    name="spectralbounds",
    version="0.0.1",
    install_requires=['numpy>=1.24', 'scipy>=1.10', 'prompt_toolkit'],
    extras_require={'test': ['hypothesis']},
    packages=['spectralbounds'],
    py_modules=['spectralbounder'],
    entry_points={'console_scripts': ['spectral-bounds=spectralbounder:main']}
)
