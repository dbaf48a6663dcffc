from setuptools import setup

setup(
    
    name = 'BroadcastFlow', 
    
    
    version = '0.2.0',
    
    
    description = 'Broadcast Congested Clique simulator with spanners, spectral sparsifiers, Laplacian and LP solvers and exact min-cost max-flow.',
    
    
    package_dir = {'':'src'},
    
    
    packages = ['bcclique',
                
 ],
    
    
    install_requires = ['numpy',
                        'scipy',
                        'networkx',
                        'pydantic>=2',
                        'tqdm',
 ],
    
    
    extras_require = {'test': ['pytest']},
    
    
    entry_points = {'console_scripts': ['bcclique=bcclique.cli:main']},
    
    
    author = 'Yash Kumar Singh Jha',
    author_email = 'ae19b016@smail.iitm.ac.in',
    
    
    long_description = open('README.md').read() + '\n\n' + open('CHANGELOG.md').read(),
    long_description_content_type = "text/markdown",
    
    
    include_package_data=True,
    
    
    keywords = ['Congested Clique', 'Distributed Algorithms', 'Spectral Sparsifier', 'Laplacian Solver', 'Interior Point Method', 'Min Cost Flow'],
    
)
